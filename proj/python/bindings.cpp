#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seaforge/annotations.hpp"
#include "seaforge/checker.hpp"
#include "seaforge/cli.hpp"
#include "seaforge/config.hpp"
#include "seaforge/error.hpp"
#include "seaforge/eval.hpp"
#include "seaforge/fixtures.hpp"
#include "seaforge/mask.hpp"
#include "seaforge/pipeline.hpp"
#include "seaforge/review.hpp"
#include "seaforge/sea_state_classifier.hpp"

namespace py = pybind11;
using namespace seaforge;

namespace {

cv::Mat to_mat(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an HxWx3 uint8 array");
  cv::Mat view(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), CV_8UC3,
               const_cast<std::uint8_t*>(a.data()));
  return view.clone();
}

py::array_t<std::uint8_t> to_array(const cv::Mat& m) {
  const cv::Mat c = m.isContinuous() ? m : m.clone();
  const auto ch = static_cast<py::ssize_t>(c.channels());
  std::vector<py::ssize_t> shape{c.rows, c.cols};
  if (ch > 1) shape.push_back(ch);
  py::array_t<std::uint8_t> out(shape);
  std::memcpy(out.mutable_data(), c.data, c.total() * c.elemSize());
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sea-state synthetic data pipeline core";

  // Messages start with the error code, e.g. "UnknownImageId: ...".
  py::register_exception<Error>(m, "SeaforgeError", PyExc_RuntimeError);

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init([](int x, int y, int w, int h, std::string label) { return BoundingBox{x, y, w, h, std::move(label)}; }),
           py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"), py::arg("class_label") = kBoatLabel)
      .def_readwrite("x", &BoundingBox::x)
      .def_readwrite("y", &BoundingBox::y)
      .def_readwrite("w", &BoundingBox::w)
      .def_readwrite("h", &BoundingBox::h)
      .def_readwrite("class_label", &BoundingBox::class_label)
      .def("area", &BoundingBox::area)
      .def("in_image", &BoundingBox::in_image)
      .def(py::self == py::self)
      .def("__repr__", [](const BoundingBox& b) {
        std::ostringstream s;
        s << "BoundingBox(" << b.x << ", " << b.y << ", " << b.w << ", " << b.h << ", '" << b.class_label << "')";
        return s.str();
      });

  m.def("intersect_area", &intersect_area);
  m.def("iou", &iou);
  m.def("box_from_floating", &box_from_floating, py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"),
        py::arg("class_label") = kBoatLabel);

  m.def(
      "build_mask",
      [](int width, int height, const std::vector<BoundingBox>& boxes, int dilation) {
        return to_array(build_mask(width, height, boxes, dilation).view());
      },
      py::arg("width"), py::arg("height"), py::arg("boxes"), py::arg("dilation") = 0,
      "Edit mask as an HxW uint8 array: 0 on boxes, 255 elsewhere.");

  m.def(
      "filter_decision",
      [](const std::vector<std::string>& verdicts) {
        std::vector<Verdict> v;
        for (const auto& s : verdicts) {
          const auto parsed = parse_verdict(s);
          if (!parsed) throw py::value_error("verdicts are 'boat' or 'not_boat'");
          v.push_back(*parsed);
        }
        return filter_decision(v);
      },
      py::arg("verdicts"));

  m.def("quarter_shift_region", &quarter_shift_region, py::arg("box"), py::arg("sx"), py::arg("sy"));
  m.def("valid_quarter_shifts", &valid_quarter_shifts, py::arg("box"), py::arg("width"), py::arg("height"));
  m.def(
      "synthesize_quarter_negative",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& image, const BoundingBox& box,
         std::uint64_t seed) {
        const Crop c = synthesize_quarter_negative(to_mat(image), box, seed);
        return py::make_tuple(c.region, to_array(c.pixels));
      },
      py::arg("image"), py::arg("box"), py::arg("seed"), "Returns (region, pixels).");

  m.def(
      "classify_sea_state",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& image) {
        const auto r = SeaStateClassifier::load(ClassifierConfig{}).classify(to_mat(image));
        return py::make_tuple(level(r.state), r.scores.scores);
      },
      py::arg("image"), "Synthetic-feature sea state: (level, scores).");
  m.def("roughness_statistic", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& image) {
    return roughness_statistic(to_mat(image));
  });

  m.def(
      "dataset_stats",
      [](const std::filesystem::path& manifest) {
        const DatasetStats s = compute_stats(manifest);
        py::dict d;
        d["generated_per_state"] = s.generated_per_state;
        d["filtered_per_state"] = s.filtered_per_state;
        d["total_generated"] = s.total_generated();
        d["total_filtered"] = s.total_filtered();
        d["passing_rate"] = s.total_generated() ? py::object(py::float_(passing_rate(s))) : py::object(py::none());
        return d;
      },
      py::arg("manifest"));
  m.def(
      "passing_rate",
      [](const std::array<std::uint64_t, 4>& generated, const std::array<std::uint64_t, 4>& filtered) {
        DatasetStats s;
        s.generated_per_state = generated;
        s.filtered_per_state = filtered;
        return passing_rate(s);
      },
      py::arg("generated"), py::arg("filtered"));

  m.def(
      "average_precision",
      [](const std::vector<std::pair<double, bool>>& hits, std::size_t n_gt) {
        std::vector<ScoredHit> h;
        for (const auto& [s, tp] : hits) h.push_back({s, tp});
        return average_precision(h, n_gt);
      },
      py::arg("hits"), py::arg("n_gt"), "101-point AP of (score, true_positive) pairs; None without ground truth.");

  m.def(
      "good_image_rate",
      [](const std::vector<double>& rates) {
        std::vector<SessionStats> s;
        for (double r : rates) s.push_back({"", 1, 1, 0, r});
        const auto g = good_image_rate(s);
        return py::make_tuple(g.mean, g.sample_std);
      },
      py::arg("session_rates"), "Mean and sample std of per-session good rates (percent).");
  m.def(
      "verdict_good",
      [](bool background_valid, bool background_realistic, bool boat_preserved) {
        return make_verdict("", "", "", RuleFlags{background_valid, background_realistic, boat_preserved}, "").good;
      },
      py::arg("background_valid"), py::arg("background_realistic"), py::arg("boat_preserved"));

  m.def(
      "write_fixture_dataset",
      [](const std::filesystem::path& dir, int count, int width, int height, std::uint64_t seed, int boats) {
        const auto ds = fixtures::write_source_dataset(dir, count, width, height, seed, boats);
        return py::make_tuple(ds.annotations, ds.image_root);
      },
      py::arg("dir"), py::arg("count"), py::arg("width") = 96, py::arg("height") = 64, py::arg("seed") = 0,
      py::arg("boats") = 2, "Writes a procedural dataset; returns (annotations, image_root).");

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& annotations, const std::filesystem::path& image_root,
         const std::filesystem::path& output_root, const std::string& config_toml, std::optional<std::int64_t> seed) {
        PipelineConfig cfg = parse_pipeline_config(config_toml, std::filesystem::current_path());
        cfg.output_root = output_root;
        if (seed) cfg.seed = *seed;
        const auto ds = load_source_dataset(annotations, image_root);
        RunSummary summary;
        {
          py::gil_scoped_release release;
          summary = run_pipeline(ds.images, cfg);
        }
        return json_to_py(to_json(summary));
      },
      py::arg("annotations"), py::arg("image_root"), py::arg("output_root"), py::arg("config_toml") = "",
      py::arg("seed") = py::none(), "Runs the full pipeline and returns the run summary as a dict.");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"seaforge"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
