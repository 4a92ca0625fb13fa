#include "seaforge/types.hpp"

#include <algorithm>

namespace seaforge {

std::size_t SourceImage::boat_count() const {
  return static_cast<std::size_t>(
      std::count_if(boxes.begin(), boxes.end(), [](const BoundingBox& b) { return b.is_boat(); }));
}

std::string_view verdict_name(Verdict v) { return v == Verdict::boat ? "boat" : "not_boat"; }

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "boat") return Verdict::boat;
  if (text == "not_boat") return Verdict::not_boat;
  return std::nullopt;
}

std::string_view crop_kind_name(CropKind kind) {
  switch (kind) {
    case CropKind::positive: return "positive";
    case CropKind::quarter_negative: return "quarter_negative";
    case CropKind::background_negative: return "background_negative";
  }
  return "unknown";
}

}  // namespace seaforge
