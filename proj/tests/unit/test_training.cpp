#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "seaforge/checker.hpp"
#include "seaforge/error.hpp"
#include "seaforge/fixtures.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/sea_state_classifier.hpp"
#include "support.hpp"

using namespace seaforge;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nn::TrainOptions toy(nn::TrainOptions o) {
  o.epochs = 5;
  o.batch_size = 8;
  o.learning_rate = 1e-2;
  o.shape.input_size = 16;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("sea-state harness learns the toy corpus") {
  test::TempDir dir("train");
  fixtures::write_sea_state_corpus(dir / "corpus", 12, 32, 1);
  const auto opts = toy(default_sea_state_train_options());
  const auto report = train_sea_state_classifier(dir / "corpus", opts, dir / "model");
  CHECK(std::isfinite(report.initial_loss));
  CHECK(std::isfinite(report.final_loss));
  CHECK(report.final_loss < report.initial_loss);
  CHECK(report.test_accuracy > 0.25);
  CHECK(report.train_count + report.test_count == 48);
  CHECK(fs::exists(dir / "model" / "model.json"));
  CHECK(fs::exists(dir / "model" / "model.bin"));

  ClassifierConfig cfg;
  cfg.mode = ClassifierMode::learned;
  cfg.model_path = dir / "model";
  const auto clf = SeaStateClassifier::load(cfg);
  const auto r = clf.classify(read_image(fs::directory_iterator(dir / "corpus" / "SS1")->path()));
  double sum = 0;
  for (double s : r.scores.scores) sum += s;
  CHECK(sum == doctest::Approx(1.0));

  // Same seed, same bytes.
  train_sea_state_classifier(dir / "corpus", opts, dir / "model2");
  CHECK(slurp(dir / "model" / "model.bin") == slurp(dir / "model2" / "model.bin"));

  // A checker model is not a sea-state model.
  train_checker(dir / "corpus" / "SS1", dir / "corpus" / "SS4", toy(default_checker_train_options()), dir / "ck");
  cfg.model_path = dir / "ck";
  CHECK_THROWS_AS(SeaStateClassifier::load(cfg), Error);
}

TEST_CASE("checker harness learns the toy corpus") {
  test::TempDir dir("train");
  fixtures::write_checker_corpus(dir / "corpus", 24, 32, 2);
  const auto report =
      train_checker(dir / "corpus" / "boat", dir / "corpus" / "not_boat", toy(default_checker_train_options()), dir / "m");
  CHECK(std::isfinite(report.final_loss));
  CHECK(report.final_loss < report.initial_loss);
  CHECK(report.test_accuracy > 0.5);

  CheckerConfig cfg;
  cfg.mode = ClassifierMode::learned;
  cfg.model_path = dir / "m";
  const auto checker = PreservationChecker::load(cfg);
  Crop c;
  c.pixels = read_image(fs::directory_iterator(dir / "corpus" / "boat")->path());
  const auto v = checker.check(c);
  CHECK(v.confidence >= 0.0);
  CHECK(v.confidence <= 1.0);
}

TEST_CASE("checker defaults are echoed in the training log") {
  test::TempDir dir("train");
  fixtures::write_checker_corpus(dir / "corpus", 4, 32, 5);
  auto opts = default_checker_train_options();
  CHECK(opts.batch_size == 32);
  CHECK(opts.learning_rate == 1e-5);
  opts.epochs = 1;
  opts.shape.input_size = 16;
  std::vector<std::string> lines;
  train_checker(dir / "corpus" / "boat", dir / "corpus" / "not_boat", opts, dir / "m", true,
                [&](const std::string& l) { lines.push_back(l); });
  REQUIRE_FALSE(lines.empty());
  CHECK(lines.front().find("optimizer=Adam") != std::string::npos);
  CHECK(lines.front().find("batch=32") != std::string::npos);
  CHECK(lines.front().find("lr=1e-5") != std::string::npos);
  CHECK(lines.front().find("decay=none") != std::string::npos);
}

TEST_CASE("training input errors") {
  test::TempDir dir("train");
  fixtures::write_checker_corpus(dir / "corpus", 2, 16, 5);
  fs::create_directories(dir / "empty");
  try {
    train_checker(dir / "corpus" / "boat", dir / "empty", toy(default_checker_train_options()), dir / "m");
    FAIL("expected EmptyClass");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_class);
  }
  fixtures::write_sea_state_corpus(dir / "ss", 2, 16, 1);
  fs::remove_all(dir / "ss" / "SS3");
  try {
    train_sea_state_classifier(dir / "ss", toy(default_sea_state_train_options()), dir / "m2");
    FAIL("expected EmptyClass");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_class);
  }
}
