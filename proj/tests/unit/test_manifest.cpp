#include <chrono>
#include <fstream>
#include <random>
#include <thread>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "manifest_fixture.hpp"
#include "seaforge/error.hpp"
#include "seaforge/manifest.hpp"
#include "seaforge/pipeline.hpp"
#include "support.hpp"

using namespace seaforge;

namespace {

ManifestRecord random_record(std::mt19937& rng, int i) {
  ManifestRecord r;
  r.edited_id = "img_" + std::to_string(i) + "_g" + std::to_string(rng() % 100);
  r.source_id = "src \"" + std::to_string(rng() % 7) + "\" é";
  r.backend_name = (rng() % 2) ? "bld-style" : "inpaint-style";
  r.prompt = "Aerial image of sea's surface.\nline two";
  r.seed = static_cast<std::int64_t>(rng()) - (1ll << 31);
  r.sea_state = sea_state_from_level(1 + static_cast<int>(rng() % 4));
  const int n = static_cast<int>(rng() % 4);
  for (int k = 0; k < n; ++k) r.crop_verdicts.push_back({k, (rng() % 2) ? Verdict::boat : Verdict::not_boat});
  r.kept = std::any_of(r.crop_verdicts.begin(), r.crop_verdicts.end(),
                       [](const auto& v) { return v.verdict == Verdict::boat; });
  r.created_at = "2024-05-0" + std::to_string(1 + rng() % 9) + "T10:00:00Z";
  return r;
}

ManifestRecord simple(const std::string& id, SeaState s, bool kept) {
  ManifestRecord r;
  r.edited_id = id;
  r.source_id = "src";
  r.backend_name = "mock";
  r.sea_state = s;
  r.crop_verdicts = {{0, kept ? Verdict::boat : Verdict::not_boat}};
  r.kept = kept;
  r.created_at = utc_timestamp();
  return r;
}

}  // namespace

TEST_CASE("append three, reload three in order") {
  test::TempDir dir("man");
  const auto file = dir / "manifest.jsonl";
  std::vector<ManifestRecord> recs{simple("a", SeaState::ss1, true), simple("b", SeaState::ss2, false),
                                   simple("c", SeaState::ss4, true)};
  for (const auto& r : recs) append_record(file, r);
  const auto loaded = load_manifest(file);
  CHECK_FALSE(loaded.torn_tail_skipped);
  CHECK(loaded.records == recs);
}

TEST_CASE("randomized round trip keeps every field") {
  test::TempDir dir("man");
  const auto file = dir / "manifest.jsonl";
  std::mt19937 rng(3);
  std::vector<ManifestRecord> recs;
  {
    ManifestWriter w(file);
    for (int i = 0; i < 200; ++i) {
      recs.push_back(random_record(rng, i));
      w.append(recs.back());
    }
  }
  CHECK(load_manifest(file).records == recs);
}

TEST_CASE("exact field names on disk") {
  const auto j = to_json(simple("a", SeaState::ss3, true));
  for (const char* key : {"edited_id", "source_id", "backend_name", "prompt", "seed", "sea_state", "crop_verdicts",
                          "kept", "created_at"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["sea_state"] == 3);
  CHECK(j["crop_verdicts"][0]["verdict"] == "boat");
  CHECK(j["crop_verdicts"][0]["box_index"] == 0);
}

TEST_CASE("torn final line is skipped on load and truncated before the next append") {
  test::TempDir dir("man");
  const auto file = dir / "manifest.jsonl";
  append_record(file, simple("a", SeaState::ss1, true));
  append_record(file, simple("b", SeaState::ss1, true));
  {
    std::ofstream out(file, std::ios::app);
    out << R"({"edited_id":"c","source_id":"src","backe)";
  }
  auto loaded = load_manifest(file);
  CHECK(loaded.torn_tail_skipped);
  REQUIRE(loaded.records.size() == 2);
  CHECK(loaded.records[1].edited_id == "b");

  append_record(file, simple("d", SeaState::ss2, false));
  loaded = load_manifest(file);
  CHECK_FALSE(loaded.torn_tail_skipped);
  REQUIRE(loaded.records.size() == 3);
  CHECK(loaded.records[2].edited_id == "d");
}

TEST_CASE("a corrupt middle line is an error, not a skip") {
  test::TempDir dir("man");
  const auto file = dir / "manifest.jsonl";
  append_record(file, simple("a", SeaState::ss1, true));
  { std::ofstream(file, std::ios::app) << "garbage\n"; }
  append_record(file, simple("b", SeaState::ss1, true));
  CHECK_THROWS_AS(load_manifest(file), Error);
}

TEST_CASE("kept without a boat verdict is rejected") {
  test::TempDir dir("man");
  ManifestRecord r = simple("a", SeaState::ss1, false);
  r.kept = true;
  try {
    append_record(dir / "m.jsonl", r);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation_error);
  }
  ManifestRecord r2 = simple("b", SeaState::ss1, true);
  r2.kept = false;
  CHECK_THROWS_AS(validate(r2), Error);
  const bool wrote = std::filesystem::exists(dir / "m.jsonl") && std::filesystem::file_size(dir / "m.jsonl") > 0;
  CHECK_FALSE(wrote);
}

TEST_CASE("concurrent appends produce whole lines") {
  test::TempDir dir("man");
  const auto file = dir / "manifest.jsonl";
  ManifestWriter w(file);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 100; ++i) w.append(simple(std::to_string(t) + "_" + std::to_string(i), SeaState::ss2, i % 2));
    });
  }
  for (auto& th : threads) th.join();
  const auto loaded = load_manifest(file);
  CHECK(loaded.records.size() == 400);
  CHECK_FALSE(loaded.torn_tail_skipped);
}

TEST_CASE("stats by hand count") {
  std::vector<ManifestRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(simple(std::to_string(i), SeaState::ss2, i < 4));
  const auto s = compute_stats(recs);
  CHECK(s.generated_per_state == std::array<std::uint64_t, 4>{0, 10, 0, 0});
  CHECK(s.filtered_per_state == std::array<std::uint64_t, 4>{0, 4, 0, 0});
}

TEST_CASE("empty and missing manifests give zero stats") {
  test::TempDir dir("man");
  CHECK(compute_stats(dir / "absent.jsonl") == DatasetStats{});
  { std::ofstream(dir / "empty.jsonl"); }
  CHECK(compute_stats(dir / "empty.jsonl") == DatasetStats{});
  CHECK_THROWS_AS(passing_rate(DatasetStats{}), Error);
}

TEST_CASE("reference per-state counts reproduce totals and passing rate") {
  test::TempDir dir("man");
  const auto file = dir / "table.jsonl";
  test::write_count_manifest(file, test::kReferenceGenerated, test::kReferenceFiltered);
  const auto start = std::chrono::steady_clock::now();
  const DatasetStats s = compute_stats(file);
  const double rate = passing_rate(s);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(s.generated_per_state == test::kReferenceGenerated);
  CHECK(s.filtered_per_state == test::kReferenceFiltered);
  CHECK(s.total_generated() == 97000);
  CHECK(s.total_filtered() == 69694);
  CHECK(std::abs(rate - 71.85) <= 0.01);
  CHECK(secs < 1.0);
}

TEST_CASE("passing rate edge cases") {
  DatasetStats none;
  none.generated_per_state = {5, 5, 5, 5};
  CHECK(passing_rate(none) == 0.0);
  DatasetStats inpaint;
  inpaint.generated_per_state = {2500, 2500, 2500, 2500};
  inpaint.filtered_per_state = {204, 204, 204, 204};
  CHECK(std::abs(passing_rate(inpaint) - 8.16) <= 0.01);
}
