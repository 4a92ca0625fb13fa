#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seaforge/manifest.hpp"
#include "seaforge/sea_state.hpp"

namespace seaforge {

struct RuleFlags {
  bool background_valid = false;      // island, ocean or cloud
  bool background_realistic = false;
  bool boat_preserved = false;        // at least one boat survives

  bool all() const { return background_valid && background_realistic && boat_preserved; }
  friend bool operator==(const RuleFlags&, const RuleFlags&) = default;
};

struct ReviewVerdict {
  std::string edited_id;
  std::string session_id;
  std::string reviewer;
  bool good = false;  // derived: AND of the rule flags
  RuleFlags rule_flags;
  std::string timestamp;
  friend bool operator==(const ReviewVerdict&, const ReviewVerdict&) = default;
};

/// Builds a verdict with `good` derived from the flags.
ReviewVerdict make_verdict(std::string session_id, std::string edited_id, std::string reviewer,
                           const RuleFlags& flags, std::string timestamp);

struct SessionFilter {
  bool kept_only = false;
  std::optional<std::string> backend_name;
  std::optional<SeaState> sea_state;
};

struct SessionSpec {
  std::string id;  // empty: assigned by the store
  std::size_t sample_size = 100;
  std::uint64_t seed = 0;
  SessionFilter filter;
  std::string label;  // free text, e.g. the method under review
};

struct ReviewSession {
  SessionSpec spec;
  std::vector<std::string> items;  // edited ids in review order
  std::string created_at;
};

/// Seeded sample of the matching records, in review order. Candidates are sorted by
/// edited_id before a Fisher-Yates shuffle, so manifest line order does not matter.
std::vector<std::string> sample_session_items(std::span<const ManifestRecord> records, const SessionSpec& spec);

struct ReviewItem {
  std::string edited_id;
  std::string source_id;
  SeaState sea_state = SeaState::ss1;
  bool kept = false;
  std::size_t position = 0;  // zero-based
  std::size_t total = 0;
};

struct SessionStats {
  std::string session_id;
  std::size_t n_items = 0;
  std::size_t n_reviewed = 0;
  std::size_t n_good = 0;
  std::optional<double> good_rate;  // percent; nullopt before the first verdict
  bool complete() const { return n_reviewed == n_items; }
};

struct GoodImageRate {
  double mean = 0;                   // percent
  std::optional<double> sample_std;  // n-1 denominator; nullopt for a single session
  std::size_t n_sessions = 0;
};

/// Mean and sample standard deviation of per-session good rates. Sessions without any
/// verdict are ignored; Errc::no_sessions when none remain.
GoodImageRate good_image_rate(std::span<const SessionStats> sessions);

nlohmann::json to_json(const ReviewVerdict& verdict);
ReviewVerdict verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionStats& stats);
nlohmann::json to_json(const GoodImageRate& rate);
nlohmann::json to_json(const ReviewItem& item);

/// Review state persisted as two append-only ledgers under `dir`: sessions.jsonl and
/// verdicts.jsonl. Everything else is recomputed from them on open. Thread-safe.
class ReviewStore {
 public:
  ReviewStore(std::filesystem::path dir, std::filesystem::path manifest);

  ReviewSession create_session(SessionSpec spec);
  /// First unreviewed item in session order, or nullopt when done. Errc::unknown_session.
  std::optional<ReviewItem> next_item(const std::string& session_id) const;
  /// Errc::unknown_session, Errc::unknown_item, Errc::duplicate_verdict.
  ReviewVerdict submit_verdict(const std::string& session_id, const std::string& edited_id,
                               const std::string& reviewer, const RuleFlags& flags);
  SessionStats session_stats(const std::string& session_id) const;
  /// Empty `session_ids` means every session.
  GoodImageRate good_image_rate(std::span<const std::string> session_ids) const;

  std::vector<std::string> session_ids() const;
  std::vector<ReviewVerdict> verdicts(const std::string& session_id) const;
  std::optional<ManifestRecord> record(const std::string& edited_id) const;
  const std::filesystem::path& manifest_path() const { return manifest_; }

 private:
  const ReviewSession& session(const std::string& id) const;
  SessionStats stats_locked(const std::string& id) const;

  std::filesystem::path dir_;
  std::filesystem::path manifest_;
  std::map<std::string, ManifestRecord> records_;
  std::map<std::string, ReviewSession> sessions_;
  std::vector<std::string> session_order_;
  std::map<std::string, std::map<std::string, ReviewVerdict>> verdicts_;  // session -> item -> verdict
  std::unique_ptr<JsonlAppender> session_log_;
  std::unique_ptr<JsonlAppender> verdict_log_;
  mutable std::mutex mu_;
};

}  // namespace seaforge
