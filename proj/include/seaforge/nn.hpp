#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

namespace seaforge::nn {

/// Densely connected conv stack: each 3x3 conv sees the concatenation of the input and
/// every earlier layer's output, followed by global average pooling and a linear head.
struct NetShape {
  int input_size = 32;
  int in_channels = 3;
  int growth = 8;
  int layers = 2;
  int classes = 2;

  int feature_channels() const { return in_channels + layers * growth; }
  std::size_t param_count() const;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// CHW float planes, size in_channels * input_size^2.
using Input = std::vector<float>;

/// Center-pads to a square, resizes to `size` and normalizes 8-bit BGR into CHW floats.
Input preprocess(const cv::Mat& bgr, int size);

class TinyDenseNet {
 public:
  TinyDenseNet() = default;
  TinyDenseNet(const NetShape& shape, std::uint64_t seed);

  const NetShape& shape() const { return shape_; }
  std::span<float> params() { return params_; }
  std::span<const float> params() const { return params_; }

  std::vector<double> logits(const Input& x) const;
  std::vector<double> probabilities(const Input& x) const;

  /// Cross-entropy for one sample; adds d(loss)/d(params) into `grad` when non-empty.
  double loss_and_grad(const Input& x, int label, std::span<float> grad) const;

  void save(const std::filesystem::path& weights) const;
  static TinyDenseNet load(const std::filesystem::path& weights, const NetShape& shape);

 private:
  struct Cache;
  void forward(const Input& x, Cache& cache) const;

  NetShape shape_;
  std::vector<float> params_;
};

/// Adam without weight decay or learning-rate schedule.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<float> params, std::span<const float> grad);

  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

struct Sample {
  cv::Mat pixels;
  int label = 0;
};

struct TrainOptions {
  int batch_size = 32;
  double learning_rate = 1e-5;
  int epochs = 10;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  NetShape shape;
  // Labels that receive random horizontal flips during training.
  std::vector<int> flip_labels;
  // Labels that receive random 3x3 Gaussian blur during training.
  std::vector<int> blur_labels;
};

nlohmann::json to_json(const TrainOptions& options);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0;
};

struct TrainOutcome {
  TinyDenseNet model;
  double initial_loss = 0;  // training-set loss before the first update
  double final_loss = 0;    // training-set loss after the last update
  std::vector<EpochStats> epochs;
  double test_accuracy = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

/// Seeded stratified split, mini-batch Adam, per-label augmentation. Every class must have
/// at least one sample (Errc::empty_class); a non-finite loss raises Errc::diverged_training.
TrainOutcome train(std::span<const Sample> samples, const TrainOptions& options,
                   const std::function<void(const std::string&)>& log = {});

double accuracy(const TinyDenseNet& model, std::span<const Sample> samples);

/// Sidecar describing a saved model: `model.json` next to `model.bin`.
struct ModelCard {
  std::string task;                      // "sea_state" or "preservation_checker"
  std::vector<std::string> class_order;  // output index -> class name
  NetShape shape;
  nlohmann::json training = nlohmann::json::object();
};

void save_model(const std::filesystem::path& dir, const ModelCard& card, const TinyDenseNet& net);

/// Throws Errc::model_missing when the directory, weights, task or class order disagree.
TinyDenseNet load_model(const std::filesystem::path& dir, const std::string& task,
                        const std::vector<std::string>& class_order);

}  // namespace seaforge::nn
