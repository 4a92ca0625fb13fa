#include "seaforge/mask.hpp"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"

namespace seaforge {

std::size_t EditMask::object_count() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), kObject));
}

cv::Mat EditMask::view() const {
  return cv::Mat(height, width, CV_8UC1, const_cast<std::uint8_t*>(pixels.data()));
}

EditMask build_mask(int width, int height, std::span<const BoundingBox> boxes, int dilation) {
  if (width <= 0 || height <= 0) throw Error(Errc::validation_error, "mask needs positive dims");
  if (dilation < 0) throw Error(Errc::validation_error, "dilation must be >= 0");
  EditMask mask;
  mask.width = width;
  mask.height = height;
  mask.pixels.assign(static_cast<std::size_t>(width) * height, EditMask::kEditable);
  for (const auto& box : boxes) {
    const auto region = dilate(box, dilation, width, height);
    if (!region) continue;
    for (int y = region->y; y < region->bottom(); ++y) {
      auto row = mask.pixels.begin() + static_cast<std::ptrdiff_t>(y) * width;
      std::fill(row + region->x, row + region->right(), EditMask::kObject);
    }
  }
  return mask;
}

EditMask build_mask(const SourceImage& src, int dilation) {
  return build_mask(src.width, src.height, src.boxes, dilation);
}

std::filesystem::path mask_path_for(const SourceImage& src, const std::filesystem::path& dir) {
  const auto base = dir.empty() ? src.path.parent_path() : dir;
  return base / (src.id + ".mask.png");
}

void save_mask(const std::filesystem::path& path, const EditMask& mask) {
  write_png(path, mask.view());
}

EditMask load_mask(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) throw Error(Errc::unreadable_image, path.string());
  EditMask mask;
  mask.width = img.cols;
  mask.height = img.rows;
  mask.pixels.reserve(static_cast<std::size_t>(img.total()));
  for (int y = 0; y < img.rows; ++y) {
    const auto* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.cols; ++x) {
      if (row[x] != EditMask::kObject && row[x] != EditMask::kEditable) {
        throw Error(Errc::validation_error, path.string() + ": mask has a non-sentinel value");
      }
      mask.pixels.push_back(row[x]);
    }
  }
  return mask;
}

}  // namespace seaforge
