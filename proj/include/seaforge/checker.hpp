#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "seaforge/nn.hpp"
#include "seaforge/sea_state_classifier.hpp"
#include "seaforge/types.hpp"

namespace seaforge {

struct CheckerConfig {
  ClassifierMode mode = ClassifierMode::synthetic_feature;
  std::filesystem::path model_path;
  double threshold = 0.5;
  // Synthetic-feature mode: confidence = exp(-mean_abs_diff / scale).
  double difference_scale = 10.0;
};

struct CheckerVerdict {
  int box_index = -1;
  Verdict verdict = Verdict::not_boat;
  double confidence = 0;  // boat-class score
};

inline Verdict verdict_for(double confidence, double threshold) {
  return confidence >= threshold ? Verdict::boat : Verdict::not_boat;
}

/// One positive crop per boat box, clamped to the image. Non-boat boxes are skipped.
/// `reference` (the pristine source) fills Crop::reference when given. Throws
/// Errc::dimension_mismatch unless the image has the source dimensions.
std::vector<Crop> extract_positive_crops(const EditedImage& image, std::span<const BoundingBox> boxes,
                                         cv::Size source_size, const cv::Mat& reference = {});
std::vector<Crop> extract_positive_crops(const EditedImage& image, const SourceImage& source,
                                         const cv::Mat& reference = {});

/// Box-sized region shifted by (sx * ceil(w/2), sy * ceil(h/2)); signs are +1 or -1.
BoundingBox quarter_shift_region(const BoundingBox& box, int sx, int sy);

/// The corner shifts whose region lies fully inside a width x height image, in the order
/// (+,+), (+,-), (-,+), (-,-).
std::vector<std::pair<int, int>> valid_quarter_shifts(const BoundingBox& box, int width, int height);

/// Crop overlapping `box` by floor(w/2) * floor(h/2) pixels, about a quarter of its area.
/// The shift is drawn uniformly from the valid ones; none valid raises
/// Errc::no_valid_placement.
Crop synthesize_quarter_negative(const cv::Mat& image, const BoundingBox& box, std::uint64_t rng_seed);

struct BackgroundSampling {
  std::vector<Crop> crops;
  std::size_t skipped = 0;
};

/// Seeded regions that intersect none of `boxes`. Crop size follows a random boat box,
/// or min(32, W, H) squares when there is none. Failed placements are counted as skipped.
BackgroundSampling sample_background_negatives(const cv::Mat& image, std::span<const BoundingBox> boxes,
                                               int count, std::uint64_t rng_seed);

class PreservationChecker {
 public:
  static PreservationChecker load(const CheckerConfig& config);

  /// Throws Errc::empty_crop; synthetic-feature mode also needs Crop::reference.
  CheckerVerdict check(const Crop& crop) const;

  const CheckerConfig& config() const { return config_; }

 private:
  CheckerConfig config_;
  std::optional<nn::TinyDenseNet> net_;
};

struct CropImage {
  std::string id;
  cv::Mat pixels;
  std::vector<BoundingBox> boxes;
};

struct NegativeSetOptions {
  int background_per_image = 2;
  bool quarter_negatives = true;
  bool include_positives = true;
  std::uint64_t seed = 0;
};

struct NegativeSetEntry {
  std::string file;  // relative to the output directory
  std::string image_id;
  CropKind kind = CropKind::positive;
  int box_index = -1;
  BoundingBox region;
};

struct NegativeSetReport {
  std::vector<NegativeSetEntry> entries;
  std::size_t positives = 0;
  std::size_t quarter_negatives = 0;
  std::size_t background_negatives = 0;
  std::size_t skipped = 0;
};

/// Writes a two-class corpus `{boat,not_boat}/<image_id>.obj<k>.<kind>.png` plus
/// `provenance.jsonl`. Positives come from `sources`; quarter and background negatives
/// from `edited`. Items without a valid placement are skipped and counted.
NegativeSetReport build_negative_set(std::span<const CropImage> sources, std::span<const CropImage> edited,
                                     const NegativeSetOptions& options, const std::filesystem::path& out_dir);

/// Batch 32, learning rate 1e-5 without decay, Adam, horizontal flips on boats only.
nn::TrainOptions default_checker_train_options();

struct CheckerTrainReport {
  double initial_loss = 0;
  double final_loss = 0;
  double test_accuracy = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::vector<std::string> log;
};

/// Trains boat vs not-boat and writes `<output>/model.json` + `model.bin`.
/// `blur_positives` adds blur augmentation to the boat class.
CheckerTrainReport train_checker(const std::filesystem::path& positives, const std::filesystem::path& negatives,
                                 const nn::TrainOptions& options, const std::filesystem::path& output,
                                 bool blur_positives = false,
                                 const std::function<void(const std::string&)>& log = {});

}  // namespace seaforge
