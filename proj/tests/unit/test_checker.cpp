#include <algorithm>
#include <fstream>
#include <functional>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "seaforge/backend.hpp"
#include "seaforge/checker.hpp"
#include "seaforge/error.hpp"
#include "seaforge/fixtures.hpp"
#include "seaforge/mask.hpp"
#include "seaforge/pipeline.hpp"
#include "support.hpp"

using namespace seaforge;

namespace {

cv::Mat sea(int w, int h, std::int64_t seed = 1) { return render_mock_texture(w, h, seed, 0.5); }

EditedImage as_edited(const cv::Mat& m) {
  EditedImage e;
  e.id = "e";
  e.pixels = m;
  e.width = m.cols;
  e.height = m.rows;
  return e;
}

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

TEST_CASE("positive crops follow the boat boxes") {
  const std::vector<BoundingBox> boxes{{2, 3, 10, 8}, {20, 5, 6, 6, "buoy"}, {30, 10, 5, 4}};
  const auto crops = extract_positive_crops(as_edited(sea(40, 20)), boxes, {40, 20});
  REQUIRE(crops.size() == 2);
  CHECK(crops[0].region == boxes[0]);
  CHECK(crops[0].box_index == 0);
  CHECK(crops[1].region == boxes[2]);
  CHECK(crops[1].box_index == 2);
  for (const auto& c : crops) {
    CHECK(c.kind == CropKind::positive);
    CHECK(c.pixels.cols == c.region.w);
    CHECK(c.pixels.rows == c.region.h);
    CHECK(c.region.in_image(40, 20));
  }
}

TEST_CASE("unresized image is a dimension mismatch") {
  const std::vector<BoundingBox> boxes{{2, 3, 10, 8}};
  CHECK(code_of([&] { extract_positive_crops(as_edited(sea(64, 64)), boxes, {40, 20}); }) ==
        Errc::dimension_mismatch);
}

TEST_CASE("overhanging box is clamped") {
  const int W = 40;
  const BoundingBox box{W - 10 + 3, 2, 10, 5};  // 3 px past the right edge
  const std::vector<BoundingBox> boxes{box};
  const auto crops = extract_positive_crops(as_edited(sea(W, 20)), boxes, {W, 20});
  REQUIRE(crops.size() == 1);
  CHECK(crops[0].region.w == box.w - 3);
  CHECK(crops[0].region.w == W - box.x);
  CHECK(crops[0].source_box == box);
}

TEST_CASE("quarter negative worked examples") {
  const BoundingBox box{100, 100, 40, 20};
  const BoundingBox region = quarter_shift_region(box, +1, +1);
  CHECK(region == BoundingBox{120, 110, 40, 20});
  CHECK(oracle::intersection_count(region, box) == 200);
  CHECK(intersect_area(region, box) * 4 == box.area());

  // Corner box: three of the four shifts leave the image.
  const BoundingBox corner{0, 0, 10, 10};
  const auto shifts = valid_quarter_shifts(corner, 15, 15);
  REQUIRE(shifts.size() == 1);
  CHECK(shifts[0] == std::pair{1, 1});
  const Crop c = synthesize_quarter_negative(sea(15, 15), corner, 7);
  CHECK(c.region == BoundingBox{5, 5, 10, 10, "not_boat"});
  CHECK(c.kind == CropKind::quarter_negative);
  // On 12x12 not even (+5,+5) fits: (5,5,10,10) ends at 15.
  CHECK(valid_quarter_shifts(corner, 12, 12).empty());
  CHECK(code_of([&] { synthesize_quarter_negative(sea(12, 12), corner, 7); }) == Errc::no_valid_placement);

  const BoundingBox odd{50, 50, 9, 9};
  const Crop o = synthesize_quarter_negative(sea(200, 200), odd, 3);
  CHECK(oracle::intersection_count(o.region, odd) == 16);
  CHECK(intersect_area(o.region, odd) == 16);
}

TEST_CASE("quarter law on random boxes, against the pixel oracle") {
  std::mt19937 rng(21);
  std::uniform_int_distribution<int> half(1, 20), any(1, 40);
  const cv::Mat img = sea(160, 160);
  for (int i = 0; i < 1000; ++i) {
    const bool even = i % 2 == 0;
    const int w = even ? 2 * half(rng) : any(rng);
    const int h = even ? 2 * half(rng) : any(rng);
    std::uniform_int_distribution<int> px(0, 160 - w), py(0, 160 - h);
    const BoundingBox box{px(rng), py(rng), w, h};
    if (valid_quarter_shifts(box, 160, 160).empty()) continue;
    const Crop c = synthesize_quarter_negative(img, box, static_cast<std::uint64_t>(i));
    REQUIRE(c.region.in_image(160, 160));
    REQUIRE(c.region.w == w);
    REQUIRE(c.region.h == h);
    const std::int64_t inter = oracle::intersection_count(c.region, box);
    REQUIRE(intersect_area(c.region, box) == inter);
    if (even) {
      REQUIRE(4 * inter == box.area());
    } else {
      REQUIRE(std::abs(4 * inter - box.area()) <= 2 * std::max(w, h));
    }
  }
}

TEST_CASE("background negatives avoid every box") {
  const cv::Mat img = sea(64, 48);
  const auto free = sample_background_negatives(img, {}, 10, 5);
  CHECK(free.crops.size() == 10);
  CHECK(free.skipped == 0);

  const std::vector<BoundingBox> boxes{{5, 5, 10, 8}, {30, 20, 12, 12}, {50, 2, 6, 6, "buoy"}};
  const auto a = sample_background_negatives(img, boxes, 25, 99);
  const auto b = sample_background_negatives(img, boxes, 25, 99);
  REQUIRE(a.crops.size() == b.crops.size());
  CHECK(a.crops.size() + a.skipped == 25);
  for (std::size_t i = 0; i < a.crops.size(); ++i) {
    CHECK(a.crops[i].region == b.crops[i].region);
    CHECK(a.crops[i].kind == CropKind::background_negative);
    CHECK(a.crops[i].region.in_image(64, 48));
    for (const auto& box : boxes) CHECK(oracle::intersection_count(a.crops[i].region, box) == 0);
  }
}

TEST_CASE("synthetic checker: preserved boats pass, corrupted ones fail") {
  GenerationRequest req;
  req.source = fixtures::make_source("s", 64, 48, 2, 8, req.source_pixels);
  req.mask = build_mask(req.source);
  req.seed = 11;
  const auto checker = PreservationChecker::load(CheckerConfig{});

  const auto clean = MockBackend{}.generate(req)[0];
  for (const auto& crop : extract_positive_crops(clean, req.source, req.source_pixels)) {
    const auto v = checker.check(crop);
    CHECK(v.verdict == Verdict::boat);
    CHECK(v.confidence == 1.0);
  }
  MockOptions opts;
  opts.corrupt_objects = true;
  const auto bad = MockBackend{opts}.generate(req)[0];
  for (const auto& crop : extract_positive_crops(bad, req.source, req.source_pixels)) {
    const auto v = checker.check(crop);
    CHECK(v.verdict == Verdict::not_boat);
    CHECK(v.confidence < 0.5);
    CHECK(checker.check(crop).confidence == v.confidence);
  }
}

TEST_CASE("checker error paths and threshold") {
  const auto checker = PreservationChecker::load(CheckerConfig{});
  Crop empty;
  CHECK(code_of([&] { checker.check(empty); }) == Errc::empty_crop);
  Crop no_ref;
  no_ref.pixels = sea(4, 4);
  CHECK(code_of([&] { checker.check(no_ref); }) == Errc::validation_error);
  CheckerConfig learned;
  learned.mode = ClassifierMode::learned;
  CHECK(code_of([&] { PreservationChecker::load(learned); }) == Errc::model_missing);
  CheckerConfig bad;
  bad.threshold = 1.5;
  CHECK(code_of([&] { PreservationChecker::load(bad); }) == Errc::config_error);

  Verdict prev = Verdict::not_boat;
  for (int i = 0; i <= 100; ++i) {
    const Verdict v = verdict_for(i / 100.0, 0.5);
    CHECK((v == Verdict::boat) == (i >= 50));
    if (prev == Verdict::boat) CHECK(v == Verdict::boat);
    prev = v;
  }
}

TEST_CASE("negative set layout, provenance and determinism") {
  test::TempDir dir("neg");
  std::vector<CropImage> sources, edited;
  for (int i = 0; i < 4; ++i) {
    cv::Mat px;
    auto src = fixtures::make_source("s" + std::to_string(i), 80, 60, 2, 100 + i, px, i == 0);
    sources.push_back({src.id, px, src.boxes});
    edited.push_back({src.id + "_g0000", sea(80, 60, i), src.boxes});
  }
  NegativeSetOptions opts;
  opts.seed = 4;
  opts.background_per_image = 3;
  const auto a = build_negative_set(sources, edited, opts, dir / "a");
  const auto b = build_negative_set(sources, edited, opts, dir / "b");
  CHECK(a.positives == 8);
  CHECK(a.quarter_negatives + a.background_negatives + a.skipped == 8 + 12);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& e = a.entries[i];
    CHECK(e.region == b.entries[i].region);
    CHECK(std::filesystem::exists(dir / "a" / e.file));
    const bool boat_dir = e.file.rfind("boat/", 0) == 0;
    CHECK(boat_dir == (e.kind == CropKind::positive));
    CHECK(e.file.find(".obj") != std::string::npos);
    CHECK(e.file.find(std::string(crop_kind_name(e.kind)) + ".png") != std::string::npos);
    if (e.kind == CropKind::background_negative) {
      const auto it = std::find_if(edited.begin(), edited.end(), [&](const CropImage& c) { return c.id == e.image_id; });
      REQUIRE(it != edited.end());
      for (const auto& box : it->boxes) CHECK(oracle::intersection_count(e.region, box) == 0);
    }
  }
  std::ifstream prov(dir / "a" / "provenance.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(prov, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("kind"));
    CHECK(j.contains("region"));
  }
  CHECK(lines == a.entries.size());
}
