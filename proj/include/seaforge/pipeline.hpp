#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seaforge/backend.hpp"
#include "seaforge/checker.hpp"
#include "seaforge/manifest.hpp"
#include "seaforge/sea_state_classifier.hpp"

namespace seaforge {

struct PipelineConfig {
  BackendConfig backend;
  ClassifierConfig classifier;
  CheckerConfig checker;
  int images_per_source = 4;
  std::int64_t seed = 0;
  std::filesystem::path output_root = "out";
  bool keep_discarded = false;
  int workers = 1;
  // Check every crop instead of stopping at the first boat verdict.
  bool audit = false;
  int mask_dilation = 0;
  // Optional dataset location, used by the CLI when no flags override it.
  std::filesystem::path annotations;
  std::filesystem::path image_root;
};

/// Throws Errc::config_error for out-of-range values.
void validate(const PipelineConfig& config);

/// Bilinear resize to the source size; images already at that size pass through untouched.
EditedImage resize_to_source(const EditedImage& edited, const SourceImage& source);

/// Keep when at least one verdict is boat; an empty list is a discard.
bool filter_decision(std::span<const Verdict> verdicts);
bool filter_decision(std::span<const CheckerVerdict> verdicts);

/// 100 * filtered / generated. Throws Errc::empty_manifest when nothing was generated.
double passing_rate(const DatasetStats& stats);

/// Base seed of a source; generation g of that source uses base + g.
std::int64_t source_seed(std::int64_t run_seed, const std::string& source_id);

struct ItemFailure {
  std::string source_id;
  std::string edited_id;  // empty when the whole source failed
  std::string error;
};

struct RunSummary {
  DatasetStats stats;  // over the whole manifest, including resumed records
  std::size_t sources_total = 0;
  std::size_t sources_skipped_no_boats = 0;
  std::size_t records_total = 0;
  std::size_t records_written = 0;  // this invocation
  std::size_t records_resumed = 0;  // already present before this invocation
  std::size_t item_failures = 0;
  std::vector<ItemFailure> failures;
};

nlohmann::json to_json(const RunSummary& summary);

std::filesystem::path manifest_path(const std::filesystem::path& output_root);
std::filesystem::path kept_image_path(const std::filesystem::path& output_root, SeaState state,
                                      const std::string& edited_id);
std::filesystem::path discarded_image_path(const std::filesystem::path& output_root,
                                           const std::string& edited_id);

/// Generate, classify, resize, crop, check, decide and record for every source.
///
/// Appends one record per generation to `<output_root>/manifest.jsonl`, copies kept images
/// to `<output_root>/SS<k>/` and writes `run_summary.json`. Generations already recorded
/// are skipped, so an interrupted run resumes where it stopped. Per-item errors are logged
/// to `failures.jsonl` and counted; only manifest I/O failures abort the run.
RunSummary run_pipeline(std::span<const SourceImage> sources, const PipelineConfig& config,
                        const GenerationBackend* backend = nullptr);

}  // namespace seaforge
