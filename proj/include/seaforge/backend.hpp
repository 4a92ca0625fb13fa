#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include "seaforge/mask.hpp"
#include "seaforge/prompts.hpp"
#include "seaforge/types.hpp"

namespace seaforge {

struct GenerationRequest {
  SourceImage source;
  cv::Mat source_pixels;  // 8-bit BGR, source.width x source.height
  EditMask mask;
  std::string prompt;
  std::int64_t seed = 0;
  int batch_size = 1;
  // Output i is named `<id_prefix>_g<first_index + i>`.
  std::string id_prefix;
  int first_index = 0;
};

/// Throws Errc::validation_error on mismatched dims or batch_size < 1.
void validate(const GenerationRequest& request);

std::string edited_image_id(const std::string& prefix, int index);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string name() const = 0;
  /// Returns batch_size images; element i carries seed + i.
  virtual std::vector<EditedImage> generate(const GenerationRequest& request) const = 0;
};

struct MockOptions {
  // Overwrite OBJECT pixels with texture on every output.
  bool corrupt_objects = false;
  // When > 0, corrupt the outputs whose seed is a multiple of this value.
  int corrupt_every = 0;
  // Fixed roughness in [0, 1]; otherwise derived from each output's seed.
  std::optional<double> roughness;
  // Native output size; unset means the source size.
  int native_width = 0;
  int native_height = 0;
};

/// Roughness the mock assigns to an output generated with `seed`.
double mock_roughness(std::int64_t seed);

/// Integer texture amplitude for a roughness in [0, 1].
int mock_amplitude(double roughness);

/// Deterministic procedural backend: EDITABLE pixels become a seeded sea texture whose
/// amplitude follows the roughness; OBJECT pixels are copied through unless corrupted.
class MockBackend final : public GenerationBackend {
 public:
  explicit MockBackend(MockOptions options = {}) : options_(options) {}

  std::string name() const override { return "mock"; }
  std::vector<EditedImage> generate(const GenerationRequest& request) const override;

  bool corrupts(std::int64_t seed) const;
  const MockOptions& options() const { return options_; }

 private:
  MockOptions options_;
};

/// Renders the mock texture for one output at full source size.
cv::Mat render_mock_texture(int width, int height, std::int64_t seed, double roughness);

enum class AdapterProfile { bld_style, inpaint_style };

enum class MaskPolarity { object_black, object_white };

struct BackendConfig {
  // "mock", "bld-style" or "inpaint-style".
  std::string name = "mock";
  std::string endpoint = "http://127.0.0.1:8090";
  double timeout_s = 120.0;
  int batch_size = 10;
  MaskPolarity mask_polarity = MaskPolarity::object_black;
  // Passed through opaquely to the generation service (steps, guidance, resolution...).
  nlohmann::json params = nlohmann::json::object();
  MockOptions mock;
};

/// HTTP adapter for an out-of-process generation service.
///
/// POST <endpoint>/v1/generate with a JSON body
///   {request_id, image_png, mask_png, mask_polarity, prompt, seed, batch_size, params}
/// where the images are base64 PNG. A 200 reply carries {request_id, images: [base64 PNG]};
/// anything else carries {error: {code, message}}.
class HttpBackend final : public GenerationBackend {
 public:
  HttpBackend(AdapterProfile profile, BackendConfig config);

  std::string name() const override;
  std::vector<EditedImage> generate(const GenerationRequest& request) const override;

  /// GET <endpoint>/v1/health; throws Errc::backend_unavailable.
  void ping() const;

 private:
  AdapterProfile profile_;
  BackendConfig config_;
  std::string host_;
  std::string base_path_;
};

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& config);

/// Whether every generation gets its own request and a per-state prompt.
bool uses_per_state_prompts(const BackendConfig& config);

/// Prompt for generation `index` of a source: the generic prompt, or a per-state prompt
/// cycling SS1..SS4 for the inpaint-style profile.
std::string prompt_for(const BackendConfig& config, const PromptBank& bank, int index);

std::string_view mask_polarity_name(MaskPolarity p);
MaskPolarity parse_mask_polarity(std::string_view text);

/// Request JSON exactly as the HTTP adapter sends it.
nlohmann::json encode_generation_request(const GenerationRequest& request,
                                         MaskPolarity polarity, const nlohmann::json& params);

/// Inverse of encode_generation_request; the source carries only id and dims.
GenerationRequest decode_generation_request(const nlohmann::json& body, MaskPolarity* polarity);

}  // namespace seaforge
