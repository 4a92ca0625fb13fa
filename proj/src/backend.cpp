#include "seaforge/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <httplib.h>
#include <opencv2/imgproc.hpp>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/rng.hpp"

namespace seaforge {

using nlohmann::json;

void validate(const GenerationRequest& request) {
  if (request.batch_size < 1) throw Error(Errc::validation_error, "batch_size must be >= 1");
  if (request.mask.width != request.source.width || request.mask.height != request.source.height) {
    throw Error(Errc::validation_error, "mask dims differ from source " + request.source.id);
  }
  if (request.source_pixels.cols != request.source.width ||
      request.source_pixels.rows != request.source.height ||
      request.source_pixels.type() != CV_8UC3) {
    throw Error(Errc::validation_error, "source pixels missing or mis-sized for " + request.source.id);
  }
}

std::string edited_image_id(const std::string& prefix, int index) {
  return fmt::format("{}_g{:04d}", prefix, index);
}

double mock_roughness(std::int64_t seed) {
  return unit_interval(splitmix64(static_cast<std::uint64_t>(seed) ^ 0x5EA5EA5EA5EA5EA5ull));
}

int mock_amplitude(double roughness) {
  return 2 + static_cast<int>(std::lround(56.0 * std::clamp(roughness, 0.0, 1.0)));
}

cv::Mat render_mock_texture(int width, int height, std::int64_t seed, double roughness) {
  static constexpr int kBase[3] = {150, 110, 70};  // BGR sea tone
  const int amp = mock_amplitude(roughness);
  const std::uint64_t key = splitmix64(static_cast<std::uint64_t>(seed));
  cv::Mat out(height, width, CV_8UC3);
  for (int y = 0; y < height; ++y) {
    auto* row = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < width; ++x) {
      const auto cell = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(width) + x;
      const int n = static_cast<int>(splitmix64(key + cell) % 3) - 1;
      for (int c = 0; c < 3; ++c) row[x][c] = static_cast<std::uint8_t>(kBase[c] + amp * n);
    }
  }
  return out;
}

bool MockBackend::corrupts(std::int64_t seed) const {
  if (options_.corrupt_objects) return true;
  return options_.corrupt_every > 0 && seed % options_.corrupt_every == 0;
}

std::vector<EditedImage> MockBackend::generate(const GenerationRequest& request) const {
  validate(request);
  const int w = request.source.width;
  const int h = request.source.height;
  std::vector<EditedImage> out;
  out.reserve(static_cast<std::size_t>(request.batch_size));
  for (int i = 0; i < request.batch_size; ++i) {
    const std::int64_t seed = request.seed + i;
    const double rough = options_.roughness.value_or(mock_roughness(seed));
    cv::Mat pixels = render_mock_texture(w, h, seed, rough);
    if (!corrupts(seed)) {
      for (int y = 0; y < h; ++y) {
        const auto* src = request.source_pixels.ptr<cv::Vec3b>(y);
        auto* dst = pixels.ptr<cv::Vec3b>(y);
        for (int x = 0; x < w; ++x) {
          if (request.mask.is_object(x, y)) dst[x] = src[x];
        }
      }
    }
    if (options_.native_width > 0 && options_.native_height > 0 &&
        (options_.native_width != w || options_.native_height != h)) {
      cv::Mat native;
      cv::resize(pixels, native, cv::Size(options_.native_width, options_.native_height), 0, 0,
                 cv::INTER_LINEAR);
      pixels = native;
    }
    EditedImage img;
    img.id = edited_image_id(request.id_prefix, request.first_index + i);
    img.source_id = request.source.id;
    img.width = pixels.cols;
    img.height = pixels.rows;
    img.backend_name = name();
    img.prompt = request.prompt;
    img.seed = seed;
    img.pixels = std::move(pixels);
    out.push_back(std::move(img));
  }
  return out;
}

std::string_view mask_polarity_name(MaskPolarity p) {
  return p == MaskPolarity::object_black ? "object_black" : "object_white";
}

MaskPolarity parse_mask_polarity(std::string_view text) {
  if (text == "object_black") return MaskPolarity::object_black;
  if (text == "object_white") return MaskPolarity::object_white;
  throw Error(Errc::config_error, "unknown mask polarity '" + std::string(text) + "'");
}

namespace {

cv::Mat polarized_mask(const EditMask& mask, MaskPolarity polarity) {
  cv::Mat m = mask.view().clone();
  if (polarity == MaskPolarity::object_white) cv::bitwise_not(m, m);
  return m;
}

std::string request_id(const GenerationRequest& r) {
  return fmt::format("{}:{}:{}", r.id_prefix, r.first_index, r.seed);
}

}  // namespace

json encode_generation_request(const GenerationRequest& request, MaskPolarity polarity,
                               const json& params) {
  return json{{"request_id", request_id(request)},
              {"source_id", request.source.id},
              {"width", request.source.width},
              {"height", request.source.height},
              {"image_png", base64_encode(encode_png(request.source_pixels))},
              {"mask_png", base64_encode(encode_png(polarized_mask(request.mask, polarity)))},
              {"mask_polarity", mask_polarity_name(polarity)},
              {"prompt", request.prompt},
              {"seed", request.seed},
              {"batch_size", request.batch_size},
              {"params", params}};
}

GenerationRequest decode_generation_request(const json& body, MaskPolarity* polarity) {
  try {
    GenerationRequest r;
    const MaskPolarity pol = parse_mask_polarity(body.at("mask_polarity").get<std::string>());
    if (polarity) *polarity = pol;
    r.source.id = body.value("source_id", std::string{});
    r.source_pixels = decode_image(base64_decode(body.at("image_png").get<std::string>()));
    r.source.width = r.source_pixels.cols;
    r.source.height = r.source_pixels.rows;
    cv::Mat m = decode_image(base64_decode(body.at("mask_png").get<std::string>()), 0);
    if (pol == MaskPolarity::object_white) cv::bitwise_not(m, m);
    r.mask.width = m.cols;
    r.mask.height = m.rows;
    r.mask.pixels.assign(m.datastart, m.dataend);
    r.prompt = body.at("prompt").get<std::string>();
    r.seed = body.at("seed").get<std::int64_t>();
    r.batch_size = body.at("batch_size").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::validation_error, std::string("generation request: ") + e.what());
  }
}

HttpBackend::HttpBackend(AdapterProfile profile, BackendConfig config)
    : profile_(profile), config_(std::move(config)) {
  // Split "http://host:port/base" into the client address and a path prefix.
  const std::string& ep = config_.endpoint;
  const auto scheme = ep.find("://");
  const auto path_start = ep.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  host_ = path_start == std::string::npos ? ep : ep.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : ep.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (host_.empty()) throw Error(Errc::config_error, "backend.endpoint is empty");
}

std::string HttpBackend::name() const {
  return profile_ == AdapterProfile::bld_style ? "bld-style" : "inpaint-style";
}

namespace {

httplib::Client make_client(const std::string& host, double timeout_s) {
  httplib::Client cli(host);
  const auto usec = static_cast<long>(std::max(timeout_s, 0.001) * 1e6);
  cli.set_connection_timeout(usec / 1000000, usec % 1000000);
  cli.set_read_timeout(usec / 1000000, usec % 1000000);
  cli.set_write_timeout(usec / 1000000, usec % 1000000);
  return cli;
}

[[noreturn]] void throw_transport(httplib::Error err, const std::string& where, bool timed_out) {
  if (err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout ||
      err == httplib::Error::BindIPAddress) {
    throw Error(Errc::backend_unavailable, where + ": " + httplib::to_string(err));
  }
  if (timed_out) throw Error(Errc::timeout, where + ": no reply within deadline");
  throw Error(Errc::generation_failed, where + ": " + httplib::to_string(err));
}

}  // namespace

void HttpBackend::ping() const {
  auto cli = make_client(host_, config_.timeout_s);
  auto res = cli.Get(base_path_ + "/v1/health");
  if (!res) throw Error(Errc::backend_unavailable, host_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(Errc::backend_unavailable, host_ + ": health returned " + std::to_string(res->status));
  }
}

std::vector<EditedImage> HttpBackend::generate(const GenerationRequest& request) const {
  validate(request);
  const std::string rid = request_id(request);
  const std::string body =
      encode_generation_request(request, config_.mask_polarity, config_.params).dump();

  auto cli = make_client(host_, config_.timeout_s);
  const auto started = std::chrono::steady_clock::now();
  auto res = cli.Post(base_path_ + "/v1/generate", body, "application/json");
  if (!res) {
    const double waited =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    throw_transport(res.error(), "request " + rid, waited >= config_.timeout_s * 0.95);
  }

  json reply = json::parse(res->body, nullptr, false);
  if (res->status != 200 || reply.is_discarded() || !reply.contains("images")) {
    std::string message = "HTTP " + std::to_string(res->status);
    if (!reply.is_discarded() && reply.contains("error")) {
      message += " " + reply["error"].value("code", std::string{}) + ": " +
                 reply["error"].value("message", std::string{});
    }
    throw Error(Errc::generation_failed, "request " + rid + ": " + message);
  }
  const auto& images = reply["images"];
  if (!images.is_array() || static_cast<int>(images.size()) != request.batch_size) {
    throw Error(Errc::generation_failed,
                "request " + rid + ": expected " + std::to_string(request.batch_size) + " images");
  }

  std::vector<EditedImage> out;
  out.reserve(images.size());
  for (int i = 0; i < request.batch_size; ++i) {
    EditedImage img;
    try {
      img.pixels = decode_image(base64_decode(images[static_cast<std::size_t>(i)].get<std::string>()));
    } catch (const Error& e) {
      throw Error(Errc::generation_failed, "request " + rid + ": " + e.what());
    }
    img.id = edited_image_id(request.id_prefix, request.first_index + i);
    img.source_id = request.source.id;
    img.width = img.pixels.cols;
    img.height = img.pixels.rows;
    img.backend_name = name();
    img.prompt = request.prompt;
    img.seed = request.seed + i;
    out.push_back(std::move(img));
  }
  return out;
}

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& config) {
  if (config.name == "mock") return std::make_unique<MockBackend>(config.mock);
  if (config.name == "bld-style") return std::make_unique<HttpBackend>(AdapterProfile::bld_style, config);
  if (config.name == "inpaint-style") {
    return std::make_unique<HttpBackend>(AdapterProfile::inpaint_style, config);
  }
  throw Error(Errc::config_error, "unknown backend.name '" + config.name + "'");
}

bool uses_per_state_prompts(const BackendConfig& config) { return config.name == "inpaint-style"; }

std::string prompt_for(const BackendConfig& config, const PromptBank& bank, int index) {
  if (!uses_per_state_prompts(config)) return bank.generic();
  return bank.for_state(kAllSeaStates[static_cast<std::size_t>(index) % 4]);
}

}  // namespace seaforge
