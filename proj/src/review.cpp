#include "seaforge/review.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "seaforge/error.hpp"
#include "seaforge/rng.hpp"

namespace seaforge {

namespace fs = std::filesystem;
using nlohmann::json;

ReviewVerdict make_verdict(std::string session_id, std::string edited_id, std::string reviewer,
                           const RuleFlags& flags, std::string timestamp) {
  return ReviewVerdict{std::move(edited_id), std::move(session_id), std::move(reviewer), flags.all(), flags,
                       std::move(timestamp)};
}

std::vector<std::string> sample_session_items(std::span<const ManifestRecord> records, const SessionSpec& spec) {
  std::vector<std::string> pool;
  for (const auto& r : records) {
    if (spec.filter.kept_only && !r.kept) continue;
    if (spec.filter.backend_name && r.backend_name != *spec.filter.backend_name) continue;
    if (spec.filter.sea_state && r.sea_state != *spec.filter.sea_state) continue;
    pool.push_back(r.edited_id);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  SplitMix rng(spec.seed);
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
  if (pool.size() > spec.sample_size) pool.resize(spec.sample_size);
  return pool;
}

GoodImageRate good_image_rate(std::span<const SessionStats> sessions) {
  std::vector<double> rates;
  for (const auto& s : sessions) {
    if (s.good_rate) rates.push_back(*s.good_rate);
  }
  if (rates.empty()) throw Error(Errc::no_sessions, "no reviewed sessions");
  GoodImageRate out;
  out.n_sessions = rates.size();
  double sum = 0;
  for (double r : rates) sum += r;
  out.mean = sum / static_cast<double>(rates.size());
  if (rates.size() >= 2) {
    double ss = 0;
    for (double r : rates) ss += (r - out.mean) * (r - out.mean);
    out.sample_std = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  }
  return out;
}

json to_json(const ReviewVerdict& v) {
  return {{"edited_id", v.edited_id},
          {"session_id", v.session_id},
          {"reviewer", v.reviewer},
          {"good", v.good},
          {"rule_flags",
           {{"background_valid", v.rule_flags.background_valid},
            {"background_realistic", v.rule_flags.background_realistic},
            {"boat_preserved", v.rule_flags.boat_preserved}}},
          {"timestamp", v.timestamp}};
}

ReviewVerdict verdict_from_json(const json& j) {
  const json& f = j.at("rule_flags");
  RuleFlags flags{f.at("background_valid").get<bool>(), f.at("background_realistic").get<bool>(),
                  f.at("boat_preserved").get<bool>()};
  // `good` is always re-derived; a stored value is never trusted.
  return make_verdict(j.at("session_id").get<std::string>(), j.at("edited_id").get<std::string>(),
                      j.value("reviewer", std::string{}), flags, j.value("timestamp", std::string{}));
}

json to_json(const SessionStats& s) {
  return {{"session_id", s.session_id},
          {"n_items", s.n_items},
          {"n_reviewed", s.n_reviewed},
          {"n_good", s.n_good},
          {"good_rate", s.good_rate ? json(*s.good_rate) : json(nullptr)},
          {"complete", s.complete()}};
}

json to_json(const GoodImageRate& r) {
  return {{"mean", r.mean}, {"sample_std", r.sample_std ? json(*r.sample_std) : json(nullptr)},
          {"n_sessions", r.n_sessions}};
}

json to_json(const ReviewItem& item) {
  return {{"edited_id", item.edited_id}, {"source_id", item.source_id},
          {"sea_state", level(item.sea_state)}, {"kept", item.kept},
          {"position", item.position},     {"total", item.total}};
}

namespace {

json session_to_json(const ReviewSession& s) {
  json filter = {{"kept_only", s.spec.filter.kept_only}};
  filter["backend_name"] = s.spec.filter.backend_name ? json(*s.spec.filter.backend_name) : json(nullptr);
  filter["sea_state"] = s.spec.filter.sea_state ? json(level(*s.spec.filter.sea_state)) : json(nullptr);
  return {{"session_id", s.spec.id}, {"sample_size", s.spec.sample_size}, {"seed", s.spec.seed},
          {"filter", filter},        {"label", s.spec.label},             {"items", s.items},
          {"created_at", s.created_at}};
}

ReviewSession session_from_json(const json& j) {
  ReviewSession s;
  s.spec.id = j.at("session_id").get<std::string>();
  s.spec.sample_size = j.at("sample_size").get<std::size_t>();
  s.spec.seed = j.at("seed").get<std::uint64_t>();
  s.spec.label = j.value("label", std::string{});
  const json& f = j.at("filter");
  s.spec.filter.kept_only = f.value("kept_only", false);
  if (f.contains("backend_name") && !f["backend_name"].is_null()) {
    s.spec.filter.backend_name = f["backend_name"].get<std::string>();
  }
  if (f.contains("sea_state") && !f["sea_state"].is_null()) {
    s.spec.filter.sea_state = sea_state_from_level(f["sea_state"].get<int>());
  }
  s.items = j.at("items").get<std::vector<std::string>>();
  s.created_at = j.value("created_at", std::string{});
  return s;
}

std::vector<json> read_ledger(const fs::path& file) {
  bool torn = false;
  std::vector<json> out;
  for (const auto& line : read_complete_lines(file, &torn)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  if (torn) spdlog::warn("{}: skipped torn final line", file.string());
  return out;
}

}  // namespace

ReviewStore::ReviewStore(fs::path dir, fs::path manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {
  for (auto& r : load_manifest(manifest_).records) records_.emplace(r.edited_id, std::move(r));
  fs::create_directories(dir_);
  try {
    for (const json& j : read_ledger(dir_ / "sessions.jsonl")) {
      ReviewSession s = session_from_json(j);
      session_order_.push_back(s.spec.id);
      sessions_.emplace(s.spec.id, std::move(s));
    }
    for (const json& j : read_ledger(dir_ / "verdicts.jsonl")) {
      ReviewVerdict v = verdict_from_json(j);
      verdicts_[v.session_id].emplace(v.edited_id, std::move(v));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::validation_error, std::string("review ledger: ") + e.what());
  }
  session_log_ = std::make_unique<JsonlAppender>(dir_ / "sessions.jsonl");
  verdict_log_ = std::make_unique<JsonlAppender>(dir_ / "verdicts.jsonl");
}

ReviewSession ReviewStore::create_session(SessionSpec spec) {
  if (spec.sample_size == 0) throw Error(Errc::validation_error, "sample_size must be >= 1");
  std::lock_guard lock(mu_);
  if (spec.id.empty()) {
    for (std::size_t n = sessions_.size() + 1;; ++n) {
      spec.id = fmt::format("s{:04d}", n);
      if (!sessions_.contains(spec.id)) break;
    }
  } else if (sessions_.contains(spec.id)) {
    throw Error(Errc::validation_error, "session '" + spec.id + "' already exists");
  }
  std::vector<ManifestRecord> all;
  all.reserve(records_.size());
  for (const auto& [_, r] : records_) all.push_back(r);
  ReviewSession s{spec, sample_session_items(all, spec), utc_timestamp()};
  if (s.items.empty()) throw Error(Errc::validation_error, "no manifest records match the session filter");
  session_log_->append_line(session_to_json(s).dump());
  session_order_.push_back(s.spec.id);
  sessions_.emplace(s.spec.id, s);
  return s;
}

const ReviewSession& ReviewStore::session(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::unknown_session, "'" + id + "'");
  return it->second;
}

std::optional<ReviewItem> ReviewStore::next_item(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const ReviewSession& s = session(session_id);
  const auto vit = verdicts_.find(session_id);
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    if (vit != verdicts_.end() && vit->second.contains(s.items[i])) continue;
    ReviewItem item;
    item.edited_id = s.items[i];
    item.position = i;
    item.total = s.items.size();
    if (const auto rit = records_.find(item.edited_id); rit != records_.end()) {
      item.source_id = rit->second.source_id;
      item.sea_state = rit->second.sea_state;
      item.kept = rit->second.kept;
    }
    return item;
  }
  return std::nullopt;
}

ReviewVerdict ReviewStore::submit_verdict(const std::string& session_id, const std::string& edited_id,
                                          const std::string& reviewer, const RuleFlags& flags) {
  std::lock_guard lock(mu_);
  const ReviewSession& s = session(session_id);
  if (std::find(s.items.begin(), s.items.end(), edited_id) == s.items.end()) {
    throw Error(Errc::unknown_item, "'" + edited_id + "' is not in session '" + session_id + "'");
  }
  auto& done = verdicts_[session_id];
  if (done.contains(edited_id)) {
    throw Error(Errc::duplicate_verdict, "'" + edited_id + "' already reviewed in '" + session_id + "'");
  }
  ReviewVerdict v = make_verdict(session_id, edited_id, reviewer, flags, utc_timestamp());
  verdict_log_->append_line(to_json(v).dump());
  done.emplace(edited_id, v);
  return v;
}

SessionStats ReviewStore::stats_locked(const std::string& id) const {
  const ReviewSession& s = session(id);
  SessionStats st;
  st.session_id = id;
  st.n_items = s.items.size();
  if (const auto it = verdicts_.find(id); it != verdicts_.end()) {
    st.n_reviewed = it->second.size();
    for (const auto& [_, v] : it->second) st.n_good += v.good ? 1 : 0;
  }
  if (st.n_reviewed > 0) st.good_rate = 100.0 * static_cast<double>(st.n_good) / static_cast<double>(st.n_reviewed);
  return st;
}

SessionStats ReviewStore::session_stats(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return stats_locked(session_id);
}

GoodImageRate ReviewStore::good_image_rate(std::span<const std::string> session_ids) const {
  std::lock_guard lock(mu_);
  std::vector<SessionStats> stats;
  const auto& ids = session_ids.empty() ? std::span<const std::string>(session_order_) : session_ids;
  for (const auto& id : ids) stats.push_back(stats_locked(id));
  return seaforge::good_image_rate(stats);
}

std::vector<std::string> ReviewStore::session_ids() const {
  std::lock_guard lock(mu_);
  return session_order_;
}

std::vector<ReviewVerdict> ReviewStore::verdicts(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const ReviewSession& s = session(session_id);
  std::vector<ReviewVerdict> out;
  const auto it = verdicts_.find(session_id);
  if (it == verdicts_.end()) return out;
  for (const auto& item : s.items) {
    if (const auto v = it->second.find(item); v != it->second.end()) out.push_back(v->second);
  }
  return out;
}

std::optional<ManifestRecord> ReviewStore::record(const std::string& edited_id) const {
  std::lock_guard lock(mu_);
  const auto it = records_.find(edited_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

}  // namespace seaforge
