#include "seaforge/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace seaforge {

BoundingBox box_from_floating(double x, double y, double w, double h, std::string label) {
  return BoundingBox{static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)),
                     static_cast<int>(std::floor(w)), static_cast<int>(std::floor(h)),
                     std::move(label)};
}

std::int64_t intersect_area(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const std::int64_t h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t inter = intersect_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<BoundingBox> clamp_to_image(const BoundingBox& box, int width, int height) {
  const int x0 = std::max(box.x, 0);
  const int y0 = std::max(box.y, 0);
  const int x1 = std::min(box.right(), width);
  const int y1 = std::min(box.bottom(), height);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0, box.class_label};
}

std::optional<BoundingBox> dilate(const BoundingBox& box, int pixels, int width, int height) {
  BoundingBox grown{box.x - pixels, box.y - pixels, box.w + 2 * pixels, box.h + 2 * pixels,
                    box.class_label};
  return clamp_to_image(grown, width, height);
}

}  // namespace seaforge
