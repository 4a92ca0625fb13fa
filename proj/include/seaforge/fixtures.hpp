#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

#include "seaforge/types.hpp"

namespace seaforge::fixtures {

// Procedural stand-ins for real data: calm-sea frames with boats, a four-level
// roughness corpus and a boat/not-boat crop corpus. Everything is a pure function of
// the arguments.

/// Paints a hull and cabin filling `box`.
void draw_boat(cv::Mat& image, const BoundingBox& box, std::uint64_t seed);

/// Calm sea with `boats` boat boxes (plus one buoy box when `with_buoy`).
SourceImage make_source(const std::string& id, int width, int height, int boats, std::uint64_t seed,
                        cv::Mat& pixels, bool with_buoy = false);

struct FixtureDataset {
  std::vector<SourceImage> sources;
  std::filesystem::path annotations;
  std::filesystem::path image_root;  // pass to load_source_dataset
};

/// Writes `<dir>/images/src_NNN.png` and `<dir>/annotations.json`, whose file names are
/// relative to `dir`.
FixtureDataset write_source_dataset(const std::filesystem::path& dir, int count, int width, int height,
                                    std::uint64_t seed, int boats_per_image = 2);

/// `<dir>/SS1..SS4/*.png`: mock textures with roughness drawn inside each level's band.
void write_sea_state_corpus(const std::filesystem::path& dir, int per_class, int size, std::uint64_t seed);

/// `<dir>/boat/*.png` boat crops and `<dir>/not_boat/*.png` sea crops.
void write_checker_corpus(const std::filesystem::path& dir, int per_class, int size, std::uint64_t seed);

}  // namespace seaforge::fixtures
