#include "seaforge/sea_state_classifier.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"

namespace seaforge {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& class_order() {
  static const std::vector<std::string> order = {"SS1", "SS2", "SS3", "SS4"};
  return order;
}

constexpr double kScoreTemperature = 4.0;

}  // namespace

std::string_view classifier_mode_name(ClassifierMode mode) {
  return mode == ClassifierMode::learned ? "learned" : "synthetic_feature";
}

ClassifierMode parse_classifier_mode(std::string_view text) {
  if (text == "learned") return ClassifierMode::learned;
  if (text == "synthetic_feature") return ClassifierMode::synthetic_feature;
  throw Error(Errc::config_error, "unknown classifier mode '" + std::string(text) + "'");
}

SeaState argmax_low_tie(const std::array<double, 4>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return kAllSeaStates[best];
}

double roughness_statistic(const cv::Mat& bgr) {
  if (bgr.empty() || bgr.cols < 2) return 0.0;
  const int ch = bgr.channels();
  double sum = 0;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x + 1 < bgr.cols; ++x) {
      for (int c = 0; c < ch; ++c) sum += std::abs(int(row[(x + 1) * ch + c]) - int(row[x * ch + c]));
    }
  }
  return sum / (static_cast<double>(bgr.rows) * (bgr.cols - 1) * ch);
}

SeaStateClassifier SeaStateClassifier::load(const ClassifierConfig& config) {
  SeaStateClassifier c;
  c.config_ = config;
  if (config.mode == ClassifierMode::learned) {
    if (config.model_path.empty()) throw Error(Errc::model_missing, "learned mode needs model_path");
    c.net_ = nn::load_model(config.model_path, "sea_state", class_order());
  }
  return c;
}

SeaStateResult SeaStateClassifier::classify(const cv::Mat& bgr) const {
  if (bgr.empty()) throw Error(Errc::unreadable_image, "empty image");
  SeaStateResult r;
  if (config_.mode == ClassifierMode::synthetic_feature) {
    // Softmax over negative distance to each level's centre: the nearest centre wins.
    const double s = roughness_statistic(bgr);
    std::array<double, 4> logit{};
    for (std::size_t i = 0; i < 4; ++i) logit[i] = -std::abs(s - kRoughnessCentres[i]) / kScoreTemperature;
    const double mx = *std::max_element(logit.begin(), logit.end());
    double total = 0;
    for (std::size_t i = 0; i < 4; ++i) total += (r.scores.scores[i] = std::exp(logit[i] - mx));
    for (auto& v : r.scores.scores) v /= total;
  } else {
    if (!net_) throw Error(Errc::model_missing, "sea-state model not loaded");
    const auto p = net_->probabilities(nn::preprocess(bgr, net_->shape().input_size));
    std::copy(p.begin(), p.end(), r.scores.scores.begin());
  }
  r.state = argmax_low_tie(r.scores.scores);
  return r;
}

SeaStateResult SeaStateClassifier::classify(const EditedImage& image) const {
  return classify(image.pixels);
}

SeaStateResult SeaStateClassifier::classify(const fs::path& image) const {
  return classify(read_image(image));
}

nn::TrainOptions default_sea_state_train_options() {
  nn::TrainOptions o;
  o.batch_size = 32;
  o.learning_rate = 1e-2;
  o.epochs = 20;
  o.shape.classes = 4;
  return o;
}

std::vector<nn::Sample> load_sea_state_corpus(const fs::path& corpus) {
  if (!fs::is_directory(corpus)) throw Error(Errc::io_failure, corpus.string() + " is not a directory");
  std::vector<nn::Sample> samples;
  for (SeaState s : kAllSeaStates) {
    fs::path dir = corpus / sea_state_name(s);
    if (!fs::is_directory(dir)) dir = corpus / std::to_string(level(s));
    std::vector<fs::path> files;
    if (fs::is_directory(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
    }
    if (files.empty()) {
      throw Error(Errc::empty_class, fmt::format("{} has no training images", sea_state_name(s)));
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) samples.push_back({read_image(f), static_cast<int>(index_of(s))});
  }
  return samples;
}

SeaStateTrainReport train_sea_state_classifier(const fs::path& corpus, const nn::TrainOptions& options,
                                               const fs::path& output,
                                               const std::function<void(const std::string&)>& log) {
  const auto samples = load_sea_state_corpus(corpus);
  nn::TrainOptions opts = options;
  opts.shape.classes = 4;
  SeaStateTrainReport report;
  const auto outcome = nn::train(samples, opts, [&](const std::string& line) {
    report.log.push_back(line);
    if (log) log(line);
  });
  nn::ModelCard card{"sea_state", class_order(), opts.shape, nn::to_json(opts)};
  card.training["test_accuracy"] = outcome.test_accuracy;
  card.training["initial_loss"] = outcome.initial_loss;
  card.training["final_loss"] = outcome.final_loss;
  nn::save_model(output, card, outcome.model);
  report.initial_loss = outcome.initial_loss;
  report.final_loss = outcome.final_loss;
  report.test_accuracy = outcome.test_accuracy;
  report.train_count = outcome.train_count;
  report.test_count = outcome.test_count;
  return report;
}

}  // namespace seaforge
