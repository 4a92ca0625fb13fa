#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "seaforge/annotations.hpp"
#include "seaforge/error.hpp"
#include "seaforge/fixtures.hpp"
#include "seaforge/image_io.hpp"
#include "support.hpp"

using namespace seaforge;
using nlohmann::json;

namespace {

void write_blank(const std::filesystem::path& p, int w, int h) { write_png(p, cv::Mat(h, w, CV_8UC3, cv::Scalar::all(90))); }

void write_json(const std::filesystem::path& p, const json& j) { std::ofstream(p) << j.dump(); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io_failure;
}

}  // namespace

TEST_CASE("one image with two boats") {
  test::TempDir dir("ann");
  write_blank(dir / "a.png", 40, 30);
  write_json(dir / "ann.json",
             {{"images", {{{"id", 1}, {"file_name", "a.png"}, {"width", 40}, {"height", 30}}}},
              {"annotations",
               {{{"image_id", 1}, {"bbox", {1, 2, 5, 6}}, {"category_id", 1}},
                {{"image_id", 1}, {"bbox", {10.6, 3.2, 4.9, 4.0}}, {"category_id", 1}},
                {{"image_id", 1}, {"bbox", {20, 20, 2, 2}}, {"category_id", 2}}}},
              {"categories", {{{"id", 1}, {"name", "boat"}}, {{"id", 2}, {"name", "buoy"}}}}});
  const auto ds = load_source_dataset(dir / "ann.json", dir.path());
  REQUIRE(ds.images.size() == 1);
  const auto& img = ds.images[0];
  CHECK(img.id == "1");
  CHECK(img.boxes.size() == 3);
  CHECK(img.boat_count() == 2);
  CHECK(img.boxes[1] == BoundingBox{10, 3, 4, 4, "boat"});
  CHECK(img.boxes[2].class_label == "buoy");
}

TEST_CASE("missing image file names the file") {
  test::TempDir dir("ann");
  write_json(dir / "ann.json", {{"images", {{{"id", "x"}, {"file_name", "nowhere.png"}}}}});
  try {
    load_source_dataset(dir / "ann.json", dir.path());
    FAIL("expected MissingImage");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_image);
    CHECK(std::string(e.what()).find("nowhere.png") != std::string::npos);
  }
}

TEST_CASE("schema violations are malformed annotations") {
  test::TempDir dir("ann");
  write_blank(dir / "a.png", 8, 8);
  write_json(dir / "bad1.json", {{"pictures", json::array()}});
  write_json(dir / "bad2.json", {{"images", {{{"id", 1}, {"file_name", "a.png"}, {"width", "wide"}, {"height", 8}}}}});
  write_json(dir / "bad3.json", {{"images", {{{"id", 1}, {"file_name", "a.png"}}}},
                                 {"annotations", {{{"image_id", 1}, {"bbox", {1, 2, 3}}}}}});
  std::ofstream(dir / "bad4.json") << "{not json";
  for (const char* f : {"bad1.json", "bad2.json", "bad3.json", "bad4.json"}) {
    CAPTURE(f);
    CHECK(code_of([&] { load_source_dataset(dir / f, dir.path()); }) == Errc::malformed_annotation);
  }
}

TEST_CASE("out-of-bounds box skips its image with a warning") {
  test::TempDir dir("ann");
  write_blank(dir / "a.png", 20, 20);
  write_blank(dir / "b.png", 20, 20);
  write_json(dir / "ann.json",
             {{"images", {{{"id", "a"}, {"file_name", "a.png"}}, {{"id", "b"}, {"file_name", "b.png"}}}},
              {"annotations", {{{"image_id", "a"}, {"bbox", {15, 15, 10, 2}}}, {{"image_id", "b"}, {"bbox", {1, 1, 2, 2}}}}}});
  const auto ds = load_source_dataset(dir / "ann.json", dir.path());
  REQUIRE(ds.images.size() == 1);
  CHECK(ds.images[0].id == "b");
  CHECK(ds.images[0].width == 20);
  REQUIRE(ds.warnings.size() == 1);
  CHECK(ds.warnings[0].record_id == "a");
  CHECK(ds.warnings[0].message.find("OutOfBoundsBox") != std::string::npos);
}

TEST_CASE("300-image dataset loads every image") {
  test::TempDir dir("ann");
  const auto fx = fixtures::write_source_dataset(dir.path(), 300, 24, 16, 9, 1);
  const auto ds = load_source_dataset(fx.annotations, fx.image_root);
  CHECK(ds.images.size() == 300);
  CHECK(ds.warnings.empty());
  for (std::size_t i = 0; i < 300; ++i) {
    REQUIRE(ds.images[i].boxes == fx.sources[i].boxes);
    REQUIRE(ds.images[i].path == fx.sources[i].path);
  }
}

TEST_CASE("source pixels must match the annotated size") {
  test::TempDir dir("ann");
  write_blank(dir / "a.png", 10, 10);
  SourceImage src{"a", dir / "a.png", 12, 10, {}};
  CHECK(code_of([&] { load_source_pixels(src); }) == Errc::dimension_mismatch);
  src.width = 10;
  CHECK(load_source_pixels(src).cols == 10);
}
