#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "seaforge/geometry.hpp"
#include "seaforge/sea_state.hpp"

namespace seaforge {

/// A real annotated image. Pixels are loaded on demand through load_pixels().
struct SourceImage {
  std::string id;
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  std::vector<BoundingBox> boxes;

  std::size_t boat_count() const;
};

/// Generated image plus provenance. `pixels` is 8-bit BGR.
struct EditedImage {
  std::string id;
  std::string source_id;
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  std::optional<SeaState> sea_state;
  std::string backend_name;
  std::string prompt;
  std::int64_t seed = 0;
  cv::Mat pixels;
};

enum class Verdict { boat, not_boat };

std::string_view verdict_name(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view text);

enum class CropKind { positive, quarter_negative, background_negative };

std::string_view crop_kind_name(CropKind kind);

struct Crop {
  int box_index = -1;
  BoundingBox source_box;
  BoundingBox region;
  cv::Mat pixels;
  // Same region cut from the pristine source; only set for positive crops.
  cv::Mat reference;
  CropKind kind = CropKind::positive;
};

}  // namespace seaforge
