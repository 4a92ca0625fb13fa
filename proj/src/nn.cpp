#include "seaforge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "seaforge/error.hpp"
#include "seaforge/rng.hpp"

namespace seaforge::nn {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'D', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

int cin_of(const NetShape& s, int layer) { return s.in_channels + layer * s.growth; }

std::size_t conv_weights(const NetShape& s, int layer) {
  return static_cast<std::size_t>(s.growth) * cin_of(s, layer) * 9;
}

// Offsets of each layer's weights and biases inside the flat parameter vector.
struct Layout {
  std::vector<std::size_t> w, b;
  std::size_t fc_w = 0, fc_b = 0, total = 0;

  explicit Layout(const NetShape& s) {
    std::size_t off = 0;
    for (int l = 0; l < s.layers; ++l) {
      w.push_back(off);
      off += conv_weights(s, l);
      b.push_back(off);
      off += static_cast<std::size_t>(s.growth);
    }
    fc_w = off;
    off += static_cast<std::size_t>(s.classes) * s.feature_channels();
    fc_b = off;
    off += static_cast<std::size_t>(s.classes);
    total = off;
  }
};

std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - mx));
  for (auto& v : p) v /= sum;
  return p;
}

std::string format_lr(double lr) {
  std::string s = fmt::format("{:g}", lr);
  if (auto pos = s.find("e-0"); pos != std::string::npos) s.erase(pos + 2, 1);
  return s;
}

}  // namespace

std::size_t NetShape::param_count() const { return Layout(*this).total; }

Input preprocess(const cv::Mat& image, int size) {
  if (image.empty()) throw Error(Errc::empty_crop, "cannot preprocess an empty image");
  cv::Mat bgr;
  if (image.channels() == 1) {
    cv::cvtColor(image, bgr, cv::COLOR_GRAY2BGR);
  } else if (image.channels() == 4) {
    cv::cvtColor(image, bgr, cv::COLOR_BGRA2BGR);
  } else {
    bgr = image;
  }
  const int side = std::max(bgr.cols, bgr.rows);
  cv::Mat square;
  const int left = (side - bgr.cols) / 2;
  const int top = (side - bgr.rows) / 2;
  cv::copyMakeBorder(bgr, square, top, side - bgr.rows - top, left, side - bgr.cols - left,
                     cv::BORDER_CONSTANT, cv::Scalar::all(0));
  cv::Mat resized;
  cv::resize(square, resized, cv::Size(size, size), 0, 0,
             side > size ? cv::INTER_AREA : cv::INTER_LINEAR);

  const std::size_t plane = static_cast<std::size_t>(size) * size;
  Input out(3 * plane);
  for (int y = 0; y < size; ++y) {
    const auto* row = resized.ptr<cv::Vec3b>(y);
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        out[c * plane + static_cast<std::size_t>(y) * size + x] =
            (static_cast<float>(row[x][c]) / 255.0f - 0.5f) / 0.25f;
      }
    }
  }
  return out;
}

struct TinyDenseNet::Cache {
  std::vector<float> features;  // feature_channels x P, input planes first
  std::vector<double> pooled;
  std::vector<double> logits;
};

TinyDenseNet::TinyDenseNet(const NetShape& shape, std::uint64_t seed) : shape_(shape) {
  if (shape.input_size < 3 || shape.classes < 2 || shape.layers < 1 || shape.growth < 1) {
    throw Error(Errc::validation_error, "invalid network shape");
  }
  const Layout layout(shape_);
  params_.assign(layout.total, 0.0f);
  std::mt19937_64 gen(seed);
  for (int l = 0; l < shape_.layers; ++l) {
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / (9.0f * cin_of(shape_, l))));
    for (std::size_t i = 0; i < conv_weights(shape_, l); ++i) params_[layout.w[l] + i] = dist(gen);
  }
  // Near-zero head so no class starts with a large logit offset.
  std::normal_distribution<float> fc(0.0f, 0.01f);
  for (std::size_t i = layout.fc_w; i < layout.fc_b; ++i) params_[i] = fc(gen);
}

void TinyDenseNet::forward(const Input& x, Cache& cache) const {
  const int n = shape_.input_size;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  if (x.size() != static_cast<std::size_t>(shape_.in_channels) * plane) {
    throw Error(Errc::validation_error, "input size does not match network");
  }
  const Layout layout(shape_);
  cache.features.assign(static_cast<std::size_t>(shape_.feature_channels()) * plane, 0.0f);
  std::copy(x.begin(), x.end(), cache.features.begin());

  for (int l = 0; l < shape_.layers; ++l) {
    const int cin = cin_of(shape_, l);
    const float* w = params_.data() + layout.w[l];
    const float* b = params_.data() + layout.b[l];
    float* out = cache.features.data() + static_cast<std::size_t>(cin) * plane;
    for (int k = 0; k < shape_.growth; ++k) {
      float* o = out + k * plane;
      std::fill(o, o + plane, b[k]);
      for (int c = 0; c < cin; ++c) {
        const float* in = cache.features.data() + c * plane;
        const float* wk = w + (static_cast<std::size_t>(k) * cin + c) * 9;
        for (int dy = -1; dy <= 1; ++dy) {
          const int y0 = std::max(0, -dy), y1 = std::min(n, n - dy);
          for (int dx = -1; dx <= 1; ++dx) {
            const float wv = wk[(dy + 1) * 3 + (dx + 1)];
            const int x0 = std::max(0, -dx), x1 = std::min(n, n - dx);
            for (int y = y0; y < y1; ++y) {
              const float* src = in + (y + dy) * n + dx;
              float* dst = o + y * n;
              for (int xx = x0; xx < x1; ++xx) dst[xx] += wv * src[xx];
            }
          }
        }
      }
      for (std::size_t p = 0; p < plane; ++p) o[p] = std::max(o[p], 0.0f);
    }
  }

  const int f = shape_.feature_channels();
  cache.pooled.assign(static_cast<std::size_t>(f), 0.0);
  for (int c = 0; c < f; ++c) {
    const float* src = cache.features.data() + c * plane;
    double s = 0;
    for (std::size_t p = 0; p < plane; ++p) s += src[p];
    cache.pooled[c] = s / static_cast<double>(plane);
  }
  cache.logits.assign(static_cast<std::size_t>(shape_.classes), 0.0);
  for (int k = 0; k < shape_.classes; ++k) {
    double z = params_[layout.fc_b + k];
    for (int c = 0; c < f; ++c) z += params_[layout.fc_w + static_cast<std::size_t>(k) * f + c] * cache.pooled[c];
    cache.logits[k] = z;
  }
}

std::vector<double> TinyDenseNet::logits(const Input& x) const {
  Cache cache;
  forward(x, cache);
  return cache.logits;
}

std::vector<double> TinyDenseNet::probabilities(const Input& x) const { return softmax(logits(x)); }

double TinyDenseNet::loss_and_grad(const Input& x, int label, std::span<float> grad) const {
  Cache cache;
  forward(x, cache);
  const auto p = softmax(cache.logits);
  const double loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
  if (grad.empty()) return loss;

  const int n = shape_.input_size;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  const int f = shape_.feature_channels();
  const Layout layout(shape_);

  std::vector<double> dz(p);
  dz[static_cast<std::size_t>(label)] -= 1.0;
  std::vector<double> dpooled(static_cast<std::size_t>(f), 0.0);
  for (int k = 0; k < shape_.classes; ++k) {
    grad[layout.fc_b + k] += static_cast<float>(dz[k]);
    for (int c = 0; c < f; ++c) {
      const std::size_t wi = layout.fc_w + static_cast<std::size_t>(k) * f + c;
      grad[wi] += static_cast<float>(dz[k] * cache.pooled[c]);
      dpooled[c] += dz[k] * params_[wi];
    }
  }

  // Gradient w.r.t. every feature plane; GAP spreads each pooled gradient uniformly.
  std::vector<float> dfeat(cache.features.size());
  for (int c = 0; c < f; ++c) {
    std::fill(dfeat.begin() + c * plane, dfeat.begin() + (c + 1) * plane,
              static_cast<float>(dpooled[c] / static_cast<double>(plane)));
  }

  for (int l = shape_.layers - 1; l >= 0; --l) {
    const int cin = cin_of(shape_, l);
    const float* w = params_.data() + layout.w[l];
    float* gw = grad.data() + layout.w[l];
    float* gb = grad.data() + layout.b[l];
    const float* out = cache.features.data() + static_cast<std::size_t>(cin) * plane;
    float* dout = dfeat.data() + static_cast<std::size_t>(cin) * plane;
    for (int k = 0; k < shape_.growth; ++k) {
      float* d = dout + k * plane;
      const float* o = out + k * plane;
      double bsum = 0;
      for (std::size_t q = 0; q < plane; ++q) {
        if (o[q] <= 0.0f) d[q] = 0.0f;
        bsum += d[q];
      }
      gb[k] += static_cast<float>(bsum);
      for (int c = 0; c < cin; ++c) {
        const float* in = cache.features.data() + c * plane;
        float* din = dfeat.data() + c * plane;
        const std::size_t wbase = (static_cast<std::size_t>(k) * cin + c) * 9;
        for (int dy = -1; dy <= 1; ++dy) {
          const int y0 = std::max(0, -dy), y1 = std::min(n, n - dy);
          for (int dx = -1; dx <= 1; ++dx) {
            const std::size_t wi = wbase + (dy + 1) * 3 + (dx + 1);
            const float wv = w[wi];
            const int x0 = std::max(0, -dx), x1 = std::min(n, n - dx);
            double acc = 0;
            for (int y = y0; y < y1; ++y) {
              const float* src = in + (y + dy) * n + dx;
              float* dsrc = din + (y + dy) * n + dx;
              const float* dd = d + y * n;
              for (int xx = x0; xx < x1; ++xx) {
                acc += dd[xx] * src[xx];
                dsrc[xx] += wv * dd[xx];
              }
            }
            gw[wi] += static_cast<float>(acc);
          }
        }
      }
    }
  }
  return loss;
}

void TinyDenseNet::save(const std::filesystem::path& weights) const {
  if (weights.has_parent_path()) std::filesystem::create_directories(weights.parent_path());
  std::ofstream out(weights, std::ios::binary);
  if (!out) throw Error(Errc::io_failure, "cannot write " + weights.string());
  const std::uint64_t count = params_.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kFormatVersion), sizeof kFormatVersion);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(float)));
  if (!out) throw Error(Errc::io_failure, "short write to " + weights.string());
}

TinyDenseNet TinyDenseNet::load(const std::filesystem::path& weights, const NetShape& shape) {
  std::ifstream in(weights, std::ios::binary);
  if (!in) throw Error(Errc::model_missing, weights.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kFormatVersion) {
    throw Error(Errc::model_missing, weights.string() + " is not a weights file");
  }
  if (count != shape.param_count()) {
    throw Error(Errc::model_missing, weights.string() + " does not match the declared architecture");
  }
  TinyDenseNet net;
  net.shape_ = shape;
  net.params_.resize(count);
  in.read(reinterpret_cast<char*>(net.params_.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw Error(Errc::model_missing, weights.string() + " is truncated");
  return net;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<float> params, std::span<const float> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= static_cast<float>(lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_));
  }
}

nlohmann::json to_json(const TrainOptions& o) {
  return {{"batch_size", o.batch_size},
          {"learning_rate", o.learning_rate},
          {"lr_decay", "none"},
          {"optimizer", "Adam"},
          {"epochs", o.epochs},
          {"test_fraction", o.test_fraction},
          {"seed", o.seed},
          {"flip_labels", o.flip_labels},
          {"blur_labels", o.blur_labels}};
}

namespace {

double mean_loss(const TinyDenseNet& model, const std::vector<Input>& inputs,
                 const std::vector<int>& labels) {
  double s = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) s += model.loss_and_grad(inputs[i], labels[i], {});
  return inputs.empty() ? 0.0 : s / static_cast<double>(inputs.size());
}

void mirror(Input& x, int n) {
  const std::size_t planes = x.size() / (static_cast<std::size_t>(n) * n);
  for (std::size_t c = 0; c < planes; ++c) {
    for (int y = 0; y < n; ++y) {
      float* row = x.data() + c * n * n + static_cast<std::size_t>(y) * n;
      std::reverse(row, row + n);
    }
  }
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

double accuracy(const TinyDenseNet& model, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const auto z = model.logits(preprocess(s.pixels, model.shape().input_size));
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainOutcome train(std::span<const Sample> samples, const TrainOptions& options,
                   const std::function<void(const std::string&)>& log) {
  const auto emit = [&](const std::string& line) {
    if (log) log(line);
  };
  const NetShape& shape = options.shape;
  if (options.batch_size < 1 || options.epochs < 1 || !(options.learning_rate > 0)) {
    throw Error(Errc::validation_error, "batch_size, epochs and learning rate must be positive");
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(shape.classes));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int label = samples[i].label;
    if (label < 0 || label >= shape.classes) {
      throw Error(Errc::validation_error, "label " + std::to_string(label) + " out of range");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  for (int c = 0; c < shape.classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].empty()) {
      throw Error(Errc::empty_class, "class " + std::to_string(c) + " has no samples");
    }
  }

  // Stratified split: a seeded shuffle per class, leaving at least one training sample.
  SplitMix rng(options.seed ^ 0x7E57ull);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& idx : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    auto n_test = static_cast<std::size_t>(std::floor(options.test_fraction * idx.size() + 0.5));
    n_test = std::min(n_test, idx.size() - 1);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }

  const int n = shape.input_size;
  std::vector<Input> plain(train_idx.size()), blurred(train_idx.size());
  std::vector<int> labels(train_idx.size());
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    const Sample& s = samples[train_idx[i]];
    labels[i] = s.label;
    plain[i] = preprocess(s.pixels, n);
    if (contains(options.blur_labels, s.label)) {
      cv::Mat b;
      cv::GaussianBlur(s.pixels, b, cv::Size(3, 3), 0);
      blurred[i] = preprocess(b, n);
    }
  }

  emit(fmt::format("optimizer=Adam batch={} lr={} decay=none epochs={} seed={} train={} test={}",
                   options.batch_size, format_lr(options.learning_rate), options.epochs,
                   options.seed, train_idx.size(), test_idx.size()));

  TrainOutcome result;
  result.model = TinyDenseNet(shape, options.seed);
  result.train_count = train_idx.size();
  result.test_count = test_idx.size();
  result.initial_loss = mean_loss(result.model, plain, labels);
  if (!std::isfinite(result.initial_loss)) {
    throw Error(Errc::diverged_training, "initial loss is not finite");
  }

  Adam adam(result.model.params().size(), options.learning_rate);
  std::vector<float> grad(result.model.params().size());
  std::vector<std::size_t> order(train_idx.size());
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0f);
      double batch_loss = 0;
      for (std::size_t j = start; j < end; ++j) {
        const std::size_t i = order[j];
        const bool blur = !blurred[i].empty() && rng.uniform() < 0.5;
        Input x = blur ? blurred[i] : plain[i];
        if (contains(options.flip_labels, labels[i]) && rng.uniform() < 0.5) mirror(x, n);
        batch_loss += result.model.loss_and_grad(x, labels[i], grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(Errc::diverged_training, fmt::format("non-finite loss in epoch {}", epoch));
      }
      const float inv = 1.0f / static_cast<float>(end - start);
      for (auto& g : grad) g *= inv;
      adam.step(result.model.params(), grad);
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(order.size());
    result.epochs.push_back({epoch, epoch_loss});
    emit(fmt::format("epoch {}/{} loss={:.6f}", epoch, options.epochs, epoch_loss));
  }

  result.final_loss = mean_loss(result.model, plain, labels);
  if (!std::isfinite(result.final_loss)) throw Error(Errc::diverged_training, "final loss is not finite");

  std::vector<Sample> held_out;
  held_out.reserve(test_idx.size());
  for (auto i : test_idx) held_out.push_back(samples[i]);
  result.test_accuracy = accuracy(result.model, held_out);
  emit(fmt::format("initial_loss={:.6f} final_loss={:.6f} test_accuracy={:.4f}", result.initial_loss,
                   result.final_loss, result.test_accuracy));
  return result;
}

void save_model(const std::filesystem::path& dir, const ModelCard& card, const TinyDenseNet& net) {
  std::filesystem::create_directories(dir);
  net.save(dir / "model.bin");
  const nlohmann::json sidecar{
      {"task", card.task},
      {"mode", "learned"},
      {"weights", "model.bin"},
      {"class_order", card.class_order},
      {"input_resolution", card.shape.input_size},
      {"architecture",
       {{"type", "tiny-densenet"},
        {"in_channels", card.shape.in_channels},
        {"growth", card.shape.growth},
        {"layers", card.shape.layers},
        {"classes", card.shape.classes}}},
      {"param_count", card.shape.param_count()},
      {"training", card.training}};
  std::ofstream out(dir / "model.json");
  if (!out) throw Error(Errc::io_failure, "cannot write " + (dir / "model.json").string());
  out << sidecar.dump(2) << '\n';
}

TinyDenseNet load_model(const std::filesystem::path& dir, const std::string& task,
                        const std::vector<std::string>& class_order) {
  std::ifstream in(dir / "model.json");
  if (!in) throw Error(Errc::model_missing, "no model.json in " + dir.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::model_missing, (dir / "model.json").string() + " is not JSON");
  try {
    if (j.at("task").get<std::string>() != task) {
      throw Error(Errc::model_missing, dir.string() + " holds a " + j.at("task").get<std::string>() + " model");
    }
    if (j.at("class_order").get<std::vector<std::string>>() != class_order) {
      throw Error(Errc::model_missing, dir.string() + ": unexpected class order");
    }
    const auto& a = j.at("architecture");
    NetShape shape;
    shape.input_size = j.at("input_resolution").get<int>();
    shape.in_channels = a.at("in_channels").get<int>();
    shape.growth = a.at("growth").get<int>();
    shape.layers = a.at("layers").get<int>();
    shape.classes = a.at("classes").get<int>();
    return TinyDenseNet::load(dir / j.value("weights", std::string("model.bin")), shape);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::model_missing, dir.string() + ": " + e.what());
  }
}

}  // namespace seaforge::nn
