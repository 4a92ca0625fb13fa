#include "seaforge/fixtures.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "seaforge/annotations.hpp"
#include "seaforge/backend.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/rng.hpp"
#include "seaforge/sea_state.hpp"

namespace seaforge::fixtures {

namespace fs = std::filesystem;

void draw_boat(cv::Mat& image, const BoundingBox& box, std::uint64_t seed) {
  SplitMix rng(seed);
  const cv::Scalar hull(235 - static_cast<int>(rng.below(20)), 235, 240);
  const cv::Scalar cabin(40 + static_cast<int>(rng.below(40)), 40, 170 + static_cast<int>(rng.below(60)));
  cv::rectangle(image, cv::Rect(box.x, box.y, box.w, box.h), hull, cv::FILLED);
  const int cw = std::max(1, box.w / 3);
  const int ch = std::max(1, box.h / 3);
  cv::rectangle(image, cv::Rect(box.x + (box.w - cw) / 2, box.y + (box.h - ch) / 2, cw, ch), cabin, cv::FILLED);
}

SourceImage make_source(const std::string& id, int width, int height, int boats, std::uint64_t seed,
                        cv::Mat& pixels, bool with_buoy) {
  SplitMix rng(seed);
  pixels = render_mock_texture(width, height, static_cast<std::int64_t>(rng.next() >> 1), 0.0);
  SourceImage src;
  src.id = id;
  src.width = width;
  src.height = height;
  const int min_side = std::min({6, width, height});
  const int max_side = std::max(min_side, std::min(width, height) / 3);
  const auto span = static_cast<std::uint64_t>(max_side - min_side + 1);
  for (int b = 0; b < boats; ++b) {
    BoundingBox box;
    box.w = min_side + static_cast<int>(rng.below(span));
    box.h = min_side + static_cast<int>(rng.below(span));
    box.x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - box.w + 1)));
    box.y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - box.h + 1)));
    draw_boat(pixels, box, rng.next());
    src.boxes.push_back(box);
  }
  if (with_buoy) {
    BoundingBox buoy{static_cast<int>(rng.below(static_cast<std::uint64_t>(width - 3))),
                     static_cast<int>(rng.below(static_cast<std::uint64_t>(height - 3))), 4, 4, "buoy"};
    cv::rectangle(pixels, cv::Rect(buoy.x, buoy.y, buoy.w, buoy.h), cv::Scalar(0, 140, 255), cv::FILLED);
    src.boxes.push_back(buoy);
  }
  return src;
}

FixtureDataset write_source_dataset(const fs::path& dir, int count, int width, int height, std::uint64_t seed,
                                    int boats_per_image) {
  FixtureDataset out;
  out.image_root = dir;
  out.annotations = dir / "annotations.json";
  for (int i = 0; i < count; ++i) {
    cv::Mat pixels;
    SourceImage src = make_source(fmt::format("src_{:03d}", i), width, height, boats_per_image,
                                  splitmix64(seed + static_cast<std::uint64_t>(i)), pixels);
    src.path = dir / "images" / (src.id + ".png");
    write_png(src.path, pixels);
    out.sources.push_back(std::move(src));
  }
  write_coco_annotations(out.annotations, out.sources, dir);
  return out;
}

void write_sea_state_corpus(const fs::path& dir, int per_class, int size, std::uint64_t seed) {
  SplitMix rng(seed);
  for (SeaState s : kAllSeaStates) {
    const double lo = 0.25 * static_cast<double>(index_of(s));
    for (int i = 0; i < per_class; ++i) {
      // Stay inside the middle of the band so neighbouring levels do not overlap.
      const double r = lo + 0.05 + 0.15 * rng.uniform();
      const cv::Mat img = render_mock_texture(size, size, static_cast<std::int64_t>(rng.next() >> 1), r);
      write_png(dir / sea_state_name(s) / fmt::format("{:03d}.png", i), img);
    }
  }
}

void write_checker_corpus(const fs::path& dir, int per_class, int size, std::uint64_t seed) {
  SplitMix rng(seed);
  for (int i = 0; i < per_class; ++i) {
    cv::Mat boat = render_mock_texture(size, size, static_cast<std::int64_t>(rng.next() >> 1), 0.0);
    const int m = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, size / 6))));
    draw_boat(boat, BoundingBox{m, m, size - 2 * m, size - 2 * m}, rng.next());
    write_png(dir / "boat" / fmt::format("{:03d}.png", i), boat);

    const cv::Mat sea =
        render_mock_texture(size, size, static_cast<std::int64_t>(rng.next() >> 1), rng.uniform());
    write_png(dir / "not_boat" / fmt::format("{:03d}.png", i), sea);
  }
}

}  // namespace seaforge::fixtures
