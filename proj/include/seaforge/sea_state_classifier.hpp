#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "seaforge/nn.hpp"
#include "seaforge/types.hpp"

namespace seaforge {

enum class ClassifierMode { learned, synthetic_feature };

std::string_view classifier_mode_name(ClassifierMode mode);
ClassifierMode parse_classifier_mode(std::string_view text);

struct ClassifierConfig {
  ClassifierMode mode = ClassifierMode::synthetic_feature;
  // Model directory holding model.json + weights; required in learned mode.
  std::filesystem::path model_path;
  int input_resolution = 32;
  std::uint64_t seed = 0;
};

/// One probability per level, SS1..SS4, summing to 1.
struct SeaStateScores {
  std::array<double, 4> scores{};
};

struct SeaStateResult {
  SeaState state = SeaState::ss1;
  SeaStateScores scores;
};

/// Highest score wins; equal scores resolve to the calmer level.
SeaState argmax_low_tie(const std::array<double, 4>& scores);

/// Mean absolute horizontal neighbour difference over all channels, in gray levels.
double roughness_statistic(const cv::Mat& bgr);

/// Statistic values the synthetic-feature mode treats as the centre of each level, calibrated
/// on mock textures at roughness 0.125, 0.375, 0.625 and 0.875. Boundaries between levels
/// sit at the midpoints.
inline constexpr std::array<double, 4> kRoughnessCentres = {8.0, 20.4, 32.9, 45.3};

class SeaStateClassifier {
 public:
  /// Learned mode reads model_path; throws Errc::model_missing when absent or unusable.
  static SeaStateClassifier load(const ClassifierConfig& config);

  SeaStateResult classify(const cv::Mat& bgr) const;
  SeaStateResult classify(const EditedImage& image) const;
  /// Throws Errc::unreadable_image.
  SeaStateResult classify(const std::filesystem::path& image) const;

  ClassifierMode mode() const { return config_.mode; }

 private:
  ClassifierConfig config_;
  std::optional<nn::TinyDenseNet> net_;
};

struct SeaStateTrainReport {
  double initial_loss = 0;
  double final_loss = 0;
  double test_accuracy = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::vector<std::string> log;
};

/// Hyperparameter defaults for the sea-state model.
nn::TrainOptions default_sea_state_train_options();

/// Reads `<corpus>/SS1..SS4/*` (or `1..4/`) images. Missing or empty levels raise
/// Errc::empty_class.
std::vector<nn::Sample> load_sea_state_corpus(const std::filesystem::path& corpus);

/// Trains on the corpus and writes `<output>/model.json` + `<output>/model.bin`.
SeaStateTrainReport train_sea_state_classifier(const std::filesystem::path& corpus,
                                               const nn::TrainOptions& options,
                                               const std::filesystem::path& output,
                                               const std::function<void(const std::string&)>& log = {});

}  // namespace seaforge
