#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace seaforge {

inline constexpr const char* kBoatLabel = "boat";

/// Axis-aligned box covering the half-open pixel rectangle [x, x+w) x [y, y+h).
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;
  std::string class_label = kBoatLabel;

  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool valid() const { return w >= 1 && h >= 1; }
  bool in_image(int width, int height) const {
    return x >= 0 && y >= 0 && right() <= width && bottom() <= height;
  }
  bool is_boat() const { return class_label == kBoatLabel; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Builds a box from fractional annotation values; coordinates and extents are floored.
BoundingBox box_from_floating(double x, double y, double w, double h, std::string label);

std::int64_t intersect_area(const BoundingBox& a, const BoundingBox& b);

double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersection with the image rectangle, or nullopt when nothing remains.
std::optional<BoundingBox> clamp_to_image(const BoundingBox& box, int width, int height);

/// Grows every side by `pixels`, then clamps to the image.
std::optional<BoundingBox> dilate(const BoundingBox& box, int pixels, int width, int height);

}  // namespace seaforge
