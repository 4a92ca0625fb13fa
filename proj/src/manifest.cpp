#include "seaforge/manifest.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "seaforge/error.hpp"

namespace seaforge {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const ManifestRecord& record) {
  if (record.edited_id.empty()) throw Error(Errc::validation_error, "edited_id is empty");
  bool any_boat = false;
  for (const auto& v : record.crop_verdicts) any_boat = any_boat || v.verdict == Verdict::boat;
  if (record.kept != any_boat) {
    throw Error(Errc::validation_error,
                record.edited_id + ": kept=" + (record.kept ? "true" : "false") +
                    " contradicts crop verdicts");
  }
}

json to_json(const ManifestRecord& r) {
  json verdicts = json::array();
  for (const auto& v : r.crop_verdicts) {
    verdicts.push_back({{"box_index", v.box_index}, {"verdict", verdict_name(v.verdict)}});
  }
  return json{{"edited_id", r.edited_id},
              {"source_id", r.source_id},
              {"backend_name", r.backend_name},
              {"prompt", r.prompt},
              {"seed", r.seed},
              {"sea_state", level(r.sea_state)},
              {"crop_verdicts", std::move(verdicts)},
              {"kept", r.kept},
              {"created_at", r.created_at}};
}

ManifestRecord record_from_json(const json& j) {
  try {
    ManifestRecord r;
    r.edited_id = j.at("edited_id").get<std::string>();
    r.source_id = j.at("source_id").get<std::string>();
    r.backend_name = j.at("backend_name").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.seed = j.at("seed").get<std::int64_t>();
    r.sea_state = sea_state_from_level(j.at("sea_state").get<int>());
    for (const auto& v : j.at("crop_verdicts")) {
      auto verdict = parse_verdict(v.at("verdict").get<std::string>());
      if (!verdict) throw Error(Errc::validation_error, "unknown verdict in " + r.edited_id);
      r.crop_verdicts.push_back({v.at("box_index").get<int>(), *verdict});
    }
    r.kept = j.at("kept").get<bool>();
    r.created_at = j.value("created_at", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::validation_error, std::string("manifest record: ") + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> read_complete_lines(const fs::path& file, bool* torn) {
  if (torn) *torn = false;
  std::vector<std::string> lines;
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    if (!fs::exists(file)) return lines;
    throw Error(Errc::io_failure, "cannot open " + file.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  std::size_t start = 0;
  while (start < data.size()) {
    const std::size_t nl = data.find('\n', start);
    if (nl == std::string::npos) {
      if (torn) *torn = true;
      break;
    }
    lines.emplace_back(data, start, nl - start);
    start = nl + 1;
  }
  return lines;
}

ManifestContents load_manifest(const fs::path& manifest) {
  ManifestContents out;
  const auto lines = read_complete_lines(manifest, &out.torn_tail_skipped);
  if (out.torn_tail_skipped) {
    spdlog::warn("{}: skipping torn final line", manifest.string());
  }
  out.records.reserve(lines.size());
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(Errc::validation_error,
                  manifest.string() + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    out.records.push_back(record_from_json(j));
  }
  return out;
}

JsonlAppender::JsonlAppender(fs::path file) : path_(std::move(file)) {
  std::error_code ec;
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path(), ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + path_.parent_path().string());

  // Drop a partial final line before appending after it.
  if (fs::exists(path_)) {
    bool torn = false;
    std::size_t complete_bytes = 0;
    for (const auto& line : read_complete_lines(path_, &torn)) complete_bytes += line.size() + 1;
    if (torn) {
      spdlog::warn("{}: truncating torn final line before appending", path_.string());
      fs::resize_file(path_, complete_bytes, ec);
      if (ec) throw Error(Errc::io_failure, "cannot repair " + path_.string());
    }
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(Errc::io_failure, "cannot open " + path_.string() + ": " + std::strerror(errno));
  }
}

JsonlAppender::~JsonlAppender() {
  if (fd_ >= 0) ::close(fd_);
}

void JsonlAppender::append_line(const std::string& line) {
  std::string payload = line;
  payload.push_back('\n');
  std::lock_guard lock(mu_);
  const char* p = payload.data();
  std::size_t left = payload.size();
  while (left > 0) {
    const ssize_t n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::io_failure, path_.string() + ": " + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

void ManifestWriter::append(const ManifestRecord& record) {
  validate(record);
  appender_.append_line(to_json(record).dump());
}

void append_record(const fs::path& manifest, const ManifestRecord& record) {
  ManifestWriter(manifest).append(record);
}

std::uint64_t DatasetStats::total_generated() const {
  std::uint64_t t = 0;
  for (auto c : generated_per_state) t += c;
  return t;
}

std::uint64_t DatasetStats::total_filtered() const {
  std::uint64_t t = 0;
  for (auto c : filtered_per_state) t += c;
  return t;
}

DatasetStats compute_stats(std::span<const ManifestRecord> records) {
  DatasetStats s;
  for (const auto& r : records) {
    ++s.generated_per_state[index_of(r.sea_state)];
    if (r.kept) ++s.filtered_per_state[index_of(r.sea_state)];
  }
  return s;
}

DatasetStats compute_stats(const fs::path& manifest) {
  return compute_stats(load_manifest(manifest).records);
}

}  // namespace seaforge
