#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seaforge/sea_state.hpp"
#include "seaforge/types.hpp"

namespace seaforge {

struct CropVerdictEntry {
  int box_index = 0;
  Verdict verdict = Verdict::not_boat;

  friend bool operator==(const CropVerdictEntry&, const CropVerdictEntry&) = default;
};

/// One line of manifest.jsonl: the keep/discard decision for one generated image.
struct ManifestRecord {
  std::string edited_id;
  std::string source_id;
  std::string backend_name;
  std::string prompt;
  std::int64_t seed = 0;
  SeaState sea_state = SeaState::ss1;
  std::vector<CropVerdictEntry> crop_verdicts;
  bool kept = false;
  std::string created_at;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Throws Errc::validation_error when kept disagrees with the verdicts.
void validate(const ManifestRecord& record);

nlohmann::json to_json(const ManifestRecord& record);
ManifestRecord record_from_json(const nlohmann::json& j);

/// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

struct ManifestContents {
  std::vector<ManifestRecord> records;
  // A final line without its newline, left by an interrupted append.
  bool torn_tail_skipped = false;
};

/// Missing file loads as empty. A torn final line is skipped with a warning; malformed
/// lines elsewhere raise Errc::validation_error with the line number.
ManifestContents load_manifest(const std::filesystem::path& manifest);

/// Low-level line appender shared by the manifest and the review ledger. Each line goes
/// out in a single O_APPEND write; a torn tail left by a crash is truncated on open.
class JsonlAppender {
 public:
  explicit JsonlAppender(std::filesystem::path file);
  ~JsonlAppender();
  JsonlAppender(const JsonlAppender&) = delete;
  JsonlAppender& operator=(const JsonlAppender&) = delete;

  void append_line(const std::string& line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mu_;
};

/// Reads complete lines; sets `torn` when the last line lacks its newline.
std::vector<std::string> read_complete_lines(const std::filesystem::path& file, bool* torn);

/// Single writer for one manifest file; validates before writing.
class ManifestWriter {
 public:
  explicit ManifestWriter(std::filesystem::path manifest) : appender_(std::move(manifest)) {}

  void append(const ManifestRecord& record);
  const std::filesystem::path& path() const { return appender_.path(); }

 private:
  JsonlAppender appender_;
};

void append_record(const std::filesystem::path& manifest, const ManifestRecord& record);

struct DatasetStats {
  std::array<std::uint64_t, 4> generated_per_state{};
  std::array<std::uint64_t, 4> filtered_per_state{};

  std::uint64_t total_generated() const;
  std::uint64_t total_filtered() const;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats compute_stats(std::span<const ManifestRecord> records);
DatasetStats compute_stats(const std::filesystem::path& manifest);

}  // namespace seaforge
