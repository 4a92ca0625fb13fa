#include "seaforge/checker.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/manifest.hpp"
#include "seaforge/rng.hpp"

namespace seaforge {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& class_order() {
  static const std::vector<std::string> order = {"not_boat", "boat"};
  return order;
}

cv::Rect rect_of(const BoundingBox& b) { return {b.x, b.y, b.w, b.h}; }

}  // namespace

std::vector<Crop> extract_positive_crops(const EditedImage& image, std::span<const BoundingBox> boxes,
                                         cv::Size source_size, const cv::Mat& reference) {
  if (image.pixels.cols != source_size.width || image.pixels.rows != source_size.height) {
    throw Error(Errc::dimension_mismatch,
                fmt::format("{} is {}x{}, source is {}x{}; resize first", image.id, image.pixels.cols,
                            image.pixels.rows, source_size.width, source_size.height));
  }
  std::vector<Crop> crops;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BoundingBox& box = boxes[i];
    if (!box.is_boat()) continue;
    const auto region = clamp_to_image(box, source_size.width, source_size.height);
    if (!region) continue;
    Crop c;
    c.box_index = static_cast<int>(i);
    c.source_box = box;
    c.region = *region;
    c.kind = CropKind::positive;
    c.pixels = image.pixels(rect_of(*region)).clone();
    if (!reference.empty()) c.reference = reference(rect_of(*region)).clone();
    crops.push_back(std::move(c));
  }
  return crops;
}

std::vector<Crop> extract_positive_crops(const EditedImage& image, const SourceImage& source,
                                         const cv::Mat& reference) {
  return extract_positive_crops(image, source.boxes, cv::Size(source.width, source.height), reference);
}

BoundingBox quarter_shift_region(const BoundingBox& box, int sx, int sy) {
  const int dx = (box.w + 1) / 2;
  const int dy = (box.h + 1) / 2;
  return BoundingBox{box.x + sx * dx, box.y + sy * dy, box.w, box.h, box.class_label};
}

std::vector<std::pair<int, int>> valid_quarter_shifts(const BoundingBox& box, int width, int height) {
  std::vector<std::pair<int, int>> out;
  for (int sx : {+1, -1}) {
    for (int sy : {+1, -1}) {
      if (quarter_shift_region(box, sx, sy).in_image(width, height)) out.emplace_back(sx, sy);
    }
  }
  return out;
}

Crop synthesize_quarter_negative(const cv::Mat& image, const BoundingBox& box, std::uint64_t rng_seed) {
  const auto shifts = valid_quarter_shifts(box, image.cols, image.rows);
  if (shifts.empty()) {
    throw Error(Errc::no_valid_placement,
                fmt::format("box ({},{},{},{}) has no in-image quarter shift", box.x, box.y, box.w, box.h));
  }
  SplitMix rng(rng_seed);
  const auto [sx, sy] = shifts[rng.below(shifts.size())];
  Crop c;
  c.source_box = box;
  c.region = quarter_shift_region(box, sx, sy);
  c.region.class_label = "not_boat";
  c.kind = CropKind::quarter_negative;
  c.pixels = image(rect_of(c.region)).clone();
  return c;
}

BackgroundSampling sample_background_negatives(const cv::Mat& image, std::span<const BoundingBox> boxes,
                                               int count, std::uint64_t rng_seed) {
  static constexpr int kAttempts = 1000;
  BackgroundSampling out;
  SplitMix rng(rng_seed);
  std::vector<const BoundingBox*> boats;
  for (const auto& b : boxes) {
    if (b.is_boat()) boats.push_back(&b);
  }
  for (int n = 0; n < count; ++n) {
    int w = std::min({32, image.cols, image.rows});
    int h = w;
    if (!boats.empty()) {
      const BoundingBox* pick = boats[rng.below(boats.size())];
      w = std::min(pick->w, image.cols);
      h = std::min(pick->h, image.rows);
    }
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      BoundingBox region{static_cast<int>(rng.below(static_cast<std::uint64_t>(image.cols - w + 1))),
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(image.rows - h + 1))), w, h,
                         "not_boat"};
      const bool clear = std::all_of(boxes.begin(), boxes.end(),
                                     [&](const BoundingBox& b) { return intersect_area(region, b) == 0; });
      if (!clear) continue;
      Crop c;
      c.box_index = n;
      c.source_box = region;
      c.region = region;
      c.kind = CropKind::background_negative;
      c.pixels = image(rect_of(region)).clone();
      out.crops.push_back(std::move(c));
      placed = true;
    }
    if (!placed) ++out.skipped;
  }
  return out;
}

PreservationChecker PreservationChecker::load(const CheckerConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw Error(Errc::config_error, "checker threshold must lie in [0, 1]");
  }
  PreservationChecker c;
  c.config_ = config;
  if (config.mode == ClassifierMode::learned) {
    if (config.model_path.empty()) throw Error(Errc::model_missing, "learned mode needs model_path");
    c.net_ = nn::load_model(config.model_path, "preservation_checker", class_order());
  }
  return c;
}

CheckerVerdict PreservationChecker::check(const Crop& crop) const {
  if (crop.pixels.empty()) throw Error(Errc::empty_crop, fmt::format("crop for box {}", crop.box_index));
  CheckerVerdict v;
  v.box_index = crop.box_index;
  if (config_.mode == ClassifierMode::synthetic_feature) {
    if (crop.reference.empty() || crop.reference.size() != crop.pixels.size() ||
        crop.reference.type() != crop.pixels.type()) {
      throw Error(Errc::validation_error, "synthetic_feature checking needs the pristine reference crop");
    }
    cv::Mat diff;
    cv::absdiff(crop.pixels, crop.reference, diff);
    const cv::Scalar per_channel = cv::mean(diff);
    double mad = 0;
    for (int c = 0; c < crop.pixels.channels(); ++c) mad += per_channel[c];
    mad /= crop.pixels.channels();
    v.confidence = std::exp(-mad / config_.difference_scale);
  } else {
    if (!net_) throw Error(Errc::model_missing, "checker model not loaded");
    v.confidence = net_->probabilities(nn::preprocess(crop.pixels, net_->shape().input_size))[1];
  }
  v.verdict = verdict_for(v.confidence, config_.threshold);
  return v;
}

NegativeSetReport build_negative_set(std::span<const CropImage> sources, std::span<const CropImage> edited,
                                     const NegativeSetOptions& options, const fs::path& out_dir) {
  if (sources.empty() && edited.empty()) throw Error(Errc::validation_error, "no images to crop from");
  NegativeSetReport report;
  JsonlAppender provenance(out_dir / "provenance.jsonl");

  const auto emit = [&](const std::string& image_id, const Crop& crop, int k) {
    const bool boat = crop.kind == CropKind::positive;
    const std::string rel = fmt::format("{}/{}.obj{}.{}.png", boat ? "boat" : "not_boat", image_id, k,
                                        crop_kind_name(crop.kind));
    write_png(out_dir / rel, crop.pixels);
    NegativeSetEntry e{rel, image_id, crop.kind, crop.box_index, crop.region};
    provenance.append_line(nlohmann::json{{"file", rel},
                                          {"image_id", image_id},
                                          {"kind", crop_kind_name(crop.kind)},
                                          {"box_index", crop.box_index},
                                          {"region", {crop.region.x, crop.region.y, crop.region.w, crop.region.h}},
                                          {"seed", options.seed}}
                               .dump());
    report.entries.push_back(std::move(e));
  };

  if (options.include_positives) {
    for (const auto& src : sources) {
      EditedImage view;
      view.id = src.id;
      view.pixels = src.pixels;
      for (const auto& crop : extract_positive_crops(view, src.boxes, src.pixels.size())) {
        emit(src.id, crop, crop.box_index);
        ++report.positives;
      }
    }
  }

  for (const auto& img : edited) {
    const std::uint64_t image_key = splitmix64(options.seed ^ fnv1a(img.id));
    if (options.quarter_negatives) {
      for (std::size_t i = 0; i < img.boxes.size(); ++i) {
        if (!img.boxes[i].is_boat()) continue;
        try {
          Crop crop = synthesize_quarter_negative(img.pixels, img.boxes[i], image_key + i);
          crop.box_index = static_cast<int>(i);
          emit(img.id, crop, static_cast<int>(i));
          ++report.quarter_negatives;
        } catch (const Error& e) {
          if (e.code() != Errc::no_valid_placement) throw;
          ++report.skipped;
        }
      }
    }
    const auto bg = sample_background_negatives(img.pixels, img.boxes, options.background_per_image,
                                                splitmix64(image_key ^ 0xB6ull));
    report.skipped += bg.skipped;
    for (const auto& crop : bg.crops) {
      emit(img.id, crop, crop.box_index);
      ++report.background_negatives;
    }
  }
  return report;
}

nn::TrainOptions default_checker_train_options() {
  nn::TrainOptions o;
  o.batch_size = 32;
  o.learning_rate = 1e-5;
  o.epochs = 10;
  o.shape.classes = 2;
  o.flip_labels = {1};
  return o;
}

namespace {

std::vector<cv::Mat> read_all_images(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() != ".jsonl" && e.path().extension() != ".json") {
        files.push_back(e.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<cv::Mat> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_image(f));
  return out;
}

}  // namespace

CheckerTrainReport train_checker(const fs::path& positives, const fs::path& negatives,
                                 const nn::TrainOptions& options, const fs::path& output, bool blur_positives,
                                 const std::function<void(const std::string&)>& log) {
  std::vector<nn::Sample> samples;
  const auto boats = read_all_images(positives);
  const auto others = read_all_images(negatives);
  if (boats.empty()) throw Error(Errc::empty_class, "no boat crops under " + positives.string());
  if (others.empty()) throw Error(Errc::empty_class, "no not_boat crops under " + negatives.string());
  for (const auto& m : others) samples.push_back({m, 0});
  for (const auto& m : boats) samples.push_back({m, 1});

  nn::TrainOptions opts = options;
  opts.shape.classes = 2;
  if (blur_positives && std::find(opts.blur_labels.begin(), opts.blur_labels.end(), 1) == opts.blur_labels.end()) {
    opts.blur_labels.push_back(1);
  }
  CheckerTrainReport report;
  const auto outcome = nn::train(samples, opts, [&](const std::string& line) {
    report.log.push_back(line);
    if (log) log(line);
  });
  nn::ModelCard card{"preservation_checker", class_order(), opts.shape, nn::to_json(opts)};
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
