#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "seaforge/types.hpp"

namespace seaforge {

/// Two-valued edit mask: OBJECT pixels are preserved, EDITABLE pixels may be regenerated.
struct EditMask {
  static constexpr std::uint8_t kObject = 0;
  static constexpr std::uint8_t kEditable = 255;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool is_object(int x, int y) const { return at(x, y) == kObject; }
  std::size_t object_count() const;

  /// Single-channel 8-bit view sharing this mask's storage.
  cv::Mat view() const;

  friend bool operator==(const EditMask&, const EditMask&) = default;
};

/// Marks every pixel of every (dilated, clamped) box as OBJECT; the rest is EDITABLE.
EditMask build_mask(int width, int height, std::span<const BoundingBox> boxes, int dilation = 0);
EditMask build_mask(const SourceImage& src, int dilation = 0);

/// `<source_id>.mask.png` next to the source image, or in `dir` when given.
std::filesystem::path mask_path_for(const SourceImage& src, const std::filesystem::path& dir = {});

void save_mask(const std::filesystem::path& path, const EditMask& mask);
EditMask load_mask(const std::filesystem::path& path);

}  // namespace seaforge
