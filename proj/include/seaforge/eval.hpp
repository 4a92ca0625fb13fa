#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seaforge/geometry.hpp"
#include "seaforge/manifest.hpp"
#include "seaforge/sea_state.hpp"

namespace seaforge {

struct Detection {
  std::string image_id;
  BoundingBox box;
  double score = 0;
  std::string class_label = kBoatLabel;
};

struct DetectionMatch {
  std::size_t detection = 0;           // index into the input list
  std::optional<std::size_t> gt;       // index into the ground truth, nullopt for a false positive
  double score = 0;
};

/// Greedy one-to-one matching in descending score order (ties keep input order). Each
/// detection takes the unmatched ground truth with the highest IoU >= `iou_thresh`.
/// Results come back in that processing order.
std::vector<DetectionMatch> match_detections(std::span<const Detection> dets, std::span<const BoundingBox> gts,
                                             double iou_thresh);

struct ScoredHit {
  double score = 0;
  bool true_positive = false;
};

/// COCO 101-point interpolated AP over hits pooled across images. Hits are ranked by
/// descending score with ties kept in input order. Returns nullopt when n_gt is zero.
std::optional<double> average_precision(std::span<const ScoredHit> hits, std::size_t n_gt);

/// 0.50, 0.55, ..., 0.95.
std::array<double, 10> iou_ladder();

struct StateMetrics {
  std::optional<double> map50;     // nullopt when the state has no ground truth
  std::optional<double> map50_95;
  std::size_t n_images = 0;
  std::size_t n_gt = 0;
  std::size_t n_detections = 0;
};

struct EvalReport {
  std::array<StateMetrics, 4> per_state;

  const StateMetrics& at(SeaState s) const { return per_state[index_of(s)]; }
  /// Mean over the states that have ground truth; nullopt when none do.
  std::optional<double> mean_map50() const;
  std::optional<double> mean_map50_95() const;
};

/// Ground-truth boxes per source id. Non-boat boxes are ignored.
using GroundTruth = std::map<std::string, std::vector<BoundingBox>>;

/// Per-sea-state mAP over kept records. Each edited image is scored against the boat boxes
/// of its source. Detections on discarded images and non-boat detections are ignored; ids
/// absent from the manifest raise Errc::unknown_image_id.
EvalReport evaluate(std::span<const ManifestRecord> records, const GroundTruth& ground_truth,
                    std::span<const Detection> detections);

/// One detection per line: `image_id,x,y,w,h,score[,class]`. Blank lines, `#` comments
/// and a leading header row are skipped. Coordinates are floored.
std::vector<Detection> parse_detections(const std::string& text);
std::vector<Detection> load_detections(const std::filesystem::path& file);

nlohmann::json to_json(const EvalReport& report);
/// Human-readable per-state table.
std::string format_report(const EvalReport& report);
/// Chart data: one row per metric, one column per state, `n/a` where undefined.
std::string format_chart_table(const EvalReport& report);

}  // namespace seaforge
