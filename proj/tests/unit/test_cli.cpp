#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "manifest_fixture.hpp"
#include "seaforge/cli.hpp"
#include "seaforge/fixtures.hpp"
#include "support.hpp"

using namespace seaforge;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "seaforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("run") != std::string::npos);
  CHECK(help.out.find("stats") != std::string::npos);

  const auto train_help = run({"train-checker", "--help"});
  CHECK(train_help.code == 0);
  CHECK(train_help.out.find("32") != std::string::npos);
  CHECK(train_help.out.find("1e-05") != std::string::npos);

  const auto bogus = run({"bogus"});
  CHECK(bogus.code == 1);
  CHECK_FALSE(bogus.err.empty());

  const auto none = run({});
  CHECK(none.code == 1);

  const auto bad_flag = run({"stats", "--nope"});
  CHECK(bad_flag.code == 1);
  CHECK(bad_flag.err.find("--manifest") != std::string::npos);

  const auto missing = run({"run", "--output", "/tmp/x"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--annotations") != std::string::npos);
}

TEST_CASE("stats over the reference counts") {
  test::TempDir dir("cli");
  test::write_count_manifest(dir / "manifest.jsonl", test::kReferenceGenerated, test::kReferenceFiltered);
  const auto text = run({"stats", "--output", dir.path().string()});
  CHECK(text.code == 0);
  CHECK(text.out.find("71.85%") != std::string::npos);
  CHECK(text.out.find("97000") != std::string::npos);
  CHECK(text.out.find("69694") != std::string::npos);

  const auto j = run({"stats", "--manifest", (dir / "manifest.jsonl").string(), "--json"});
  REQUIRE(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc.at("total_generated") == 97000);
  CHECK(doc.at("generated_per_state").at("SS3") == 65275);
  CHECK(doc.at("passing_rate").get<double>() == doctest::Approx(100.0 * 69694 / 97000));

  const auto gone = run({"stats", "--output", (dir / "nowhere").string()});
  CHECK(gone.code == 2);
}

TEST_CASE("end-to-end run is reproducible from the command line") {
  test::TempDir dir("cli");
  const auto fx = run({"fixtures", "--output", (dir / "fx").string(), "--count", "3", "--corpus-size", "2"});
  REQUIRE(fx.code == 0);
  const std::string ann = (dir / "fx" / "sources" / "annotations.json").string();
  REQUIRE(fs::exists(ann));

  for (const char* name : {"a", "b"}) {
    const auto r = run({"run", "--annotations", ann, "--output", (dir / name).string(), "--seed", "7",
                        "--images-per-source", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("passing rate:") != std::string::npos);
  }
  CHECK(slurp(dir / "a" / "run_summary.json") == slurp(dir / "b" / "run_summary.json"));
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "run_summary.json"));
  CHECK(summary.at("total_generated") == 9);

  const auto st = run({"stats", "--output", (dir / "a").string(), "--json"});
  CHECK(nlohmann::json::parse(st.out).at("total_generated") == 9);

  const auto masks = run({"mask", "--annotations", ann, "--output", (dir / "masks").string()});
  CHECK(masks.code == 0);
  CHECK(fs::exists(dir / "masks" / "src_000.mask.png"));

  const auto cls = run({"classify", "--json", (dir / "fx" / "sources" / "images" / "src_000.png").string()});
  CHECK(cls.code == 0);
  CHECK(nlohmann::json::parse(cls.out).at(0).at("sea_state") == 1);

  const auto bad = run({"run", "--annotations", ann, "--output", (dir / "c").string(), "--backend", "warp"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("ConfigError") != std::string::npos);
}

TEST_CASE("eval from the command line") {
  test::TempDir dir("cli");
  REQUIRE(run({"fixtures", "--output", (dir / "fx").string(), "--count", "2", "--corpus-size", "1"}).code == 0);
  const std::string ann = (dir / "fx" / "sources" / "annotations.json").string();
  REQUIRE(run({"run", "--annotations", ann, "--output", (dir / "out").string(), "--images-per-source", "1"}).code == 0);
  std::ofstream(dir / "empty.csv") << "image_id,x,y,w,h,score\n";
  const auto r = run({"eval", "--annotations", ann, "--output", (dir / "out").string(), "--detections",
                      (dir / "empty.csv").string(), "--json", "--chart"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("chart").get<std::string>().rfind("metric,SS1,SS2,SS3,SS4", 0) == 0);

  std::ofstream(dir / "stray.csv") << "ghost_g0000,0,0,4,4,0.5\n";
  const auto stray = run({"eval", "--annotations", ann, "--output", (dir / "out").string(), "--detections",
                          (dir / "stray.csv").string()});
  CHECK(stray.code == 2);
  CHECK(stray.err.find("UnknownImageId") != std::string::npos);
}
