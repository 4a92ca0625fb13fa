#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "seaforge/types.hpp"

namespace seaforge {

struct LoadWarning {
  std::string record_id;
  std::string message;
};

struct SourceDataset {
  std::vector<SourceImage> images;
  std::vector<LoadWarning> warnings;
};

/// Reads a COCO-style annotation file (images, annotations with bbox [x, y, w, h], categories).
///
/// Images whose boxes leave the frame are skipped and reported in `warnings`; boxes that
/// floor to zero extent are dropped the same way. A referenced file that does not exist
/// raises Errc::missing_image, and schema violations raise Errc::malformed_annotation.
/// Non-boat categories are kept on the image; only `boat` boxes are preservation targets.
SourceDataset load_source_dataset(const std::filesystem::path& annotation_file,
                                  const std::filesystem::path& image_root);

/// Writes `images` as COCO JSON; file names are stored relative to `image_root`.
void write_coco_annotations(const std::filesystem::path& annotation_file,
                            std::span<const SourceImage> images,
                            const std::filesystem::path& image_root);

/// Loads the image and checks it against the annotated dimensions.
cv::Mat load_source_pixels(const SourceImage& src);

}  // namespace seaforge
