#include "seaforge/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seaforge/error.hpp"

namespace seaforge {

namespace {

std::vector<std::size_t> rank_by_score(std::size_t n, const auto& score_of) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score_of(a) > score_of(b); });
  return order;
}

std::optional<double> mean_of(const std::array<StateMetrics, 4>& states, auto member) {
  double sum = 0;
  int n = 0;
  for (const auto& s : states) {
    if (const auto& v = s.*member) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string fmt_metric(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "n/a"; }

}  // namespace

std::vector<DetectionMatch> match_detections(std::span<const Detection> dets, std::span<const BoundingBox> gts,
                                             double iou_thresh) {
  const auto order = rank_by_score(dets.size(), [&](std::size_t i) { return dets[i].score; });
  std::vector<bool> taken(gts.size(), false);
  std::vector<DetectionMatch> out;
  out.reserve(dets.size());
  for (std::size_t d : order) {
    DetectionMatch m{d, std::nullopt, dets[d].score};
    double best = iou_thresh;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(dets[d].box, gts[g]);
      if (v >= best && (!m.gt || v > best)) {
        best = v;
        m.gt = g;
      }
    }
    if (m.gt) taken[*m.gt] = true;
    out.push_back(m);
  }
  return out;
}

std::optional<double> average_precision(std::span<const ScoredHit> hits, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  const auto order = rank_by_score(hits.size(), [&](std::size_t i) { return hits[i].score; });
  std::vector<double> precision(order.size()), recall(order.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (hits[order[k]].true_positive) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  // Monotone precision envelope, right to left.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::array<double, 10> iou_ladder() {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) t[i] = 0.5 + 0.05 * i;
  return t;
}

std::optional<double> EvalReport::mean_map50() const { return mean_of(per_state, &StateMetrics::map50); }
std::optional<double> EvalReport::mean_map50_95() const { return mean_of(per_state, &StateMetrics::map50_95); }

EvalReport evaluate(std::span<const ManifestRecord> records, const GroundTruth& ground_truth,
                    std::span<const Detection> detections) {
  std::unordered_map<std::string, const ManifestRecord*> by_id;
  for (const auto& r : records) by_id[r.edited_id] = &r;

  // Boat detections per kept image, in file order.
  std::unordered_map<std::string, std::vector<Detection>> per_image;
  for (const auto& d : detections) {
    const auto it = by_id.find(d.image_id);
    if (it == by_id.end()) throw Error(Errc::unknown_image_id, "'" + d.image_id + "' is not in the manifest");
    if (!it->second->kept || d.class_label != kBoatLabel) continue;
    per_image[d.image_id].push_back(d);
  }

  EvalReport report;
  const auto ladder = iou_ladder();
  std::array<std::array<std::vector<ScoredHit>, 10>, 4> hits;
  for (const auto& r : records) {
    if (!r.kept) continue;
    const auto gt_it = ground_truth.find(r.source_id);
    if (gt_it == ground_truth.end()) {
      throw Error(Errc::validation_error, "no ground truth for source '" + r.source_id + "'");
    }
    std::vector<BoundingBox> gts;
    for (const auto& b : gt_it->second) {
      if (b.is_boat()) gts.push_back(b);
    }
    const std::size_t s = index_of(r.sea_state);
    StateMetrics& m = report.per_state[s];
    ++m.n_images;
    m.n_gt += gts.size();
    const auto det_it = per_image.find(r.edited_id);
    if (det_it == per_image.end()) continue;
    m.n_detections += det_it->second.size();
    for (std::size_t t = 0; t < ladder.size(); ++t) {
      for (const auto& match : match_detections(det_it->second, gts, ladder[t])) {
        hits[s][t].push_back({match.score, match.gt.has_value()});
      }
    }
  }

  for (std::size_t s = 0; s < 4; ++s) {
    StateMetrics& m = report.per_state[s];
    if (m.n_gt == 0) continue;
    double sum = 0;
    for (std::size_t t = 0; t < ladder.size(); ++t) {
      const double ap = *average_precision(hits[s][t], m.n_gt);
      if (t == 0) m.map50 = ap;
      sum += ap;
    }
    m.map50_95 = sum / static_cast<double>(ladder.size());
  }
  return report;
}

std::vector<Detection> parse_detections(const std::string& text) {
  std::vector<Detection> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) {
      const auto b = f.find_first_not_of(" \t");
      const auto e = f.find_last_not_of(" \t");
      fields.push_back(b == std::string::npos ? "" : f.substr(b, e - b + 1));
    }
    if (out.empty() && line_no == 1 && !fields.empty() && fields[0] == "image_id") continue;
    if (fields.size() != 6 && fields.size() != 7) {
      throw Error(Errc::validation_error, fmt::format("detections line {}: expected 6 or 7 fields", line_no));
    }
    Detection d;
    d.image_id = fields[0];
    double v[5];
    try {
      for (int i = 0; i < 5; ++i) {
        std::size_t used = 0;
        v[i] = std::stod(fields[i + 1], &used);
        if (used != fields[i + 1].size()) throw std::invalid_argument("trailing text");
      }
    } catch (const std::exception&) {
      throw Error(Errc::validation_error, fmt::format("detections line {}: bad number", line_no));
    }
    if (fields.size() == 7 && !fields[6].empty()) d.class_label = fields[6];
    d.box = box_from_floating(v[0], v[1], v[2], v[3], d.class_label);
    d.score = v[4];
    if (!d.box.valid()) throw Error(Errc::validation_error, fmt::format("detections line {}: empty box", line_no));
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(Errc::validation_error, fmt::format("detections line {}: score outside [0, 1]", line_no));
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_failure, "cannot read " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_detections(buf.str());
}

nlohmann::json to_json(const EvalReport& report) {
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json states = nlohmann::json::object();
  for (SeaState s : kAllSeaStates) {
    const auto& m = report.at(s);
    states[std::string(sea_state_name(s))] = {{"map50", opt(m.map50)},
                                              {"map50_95", opt(m.map50_95)},
                                              {"n_images", m.n_images},
                                              {"n_gt", m.n_gt},
                                              {"n_detections", m.n_detections}};
  }
  return {{"per_state", states},
          {"mean_map50", opt(report.mean_map50())},
          {"mean_map50_95", opt(report.mean_map50_95())}};
}

std::string format_report(const EvalReport& report) {
  std::string out = fmt::format("{:<6}{:>10}{:>10}{:>10}{:>8}\n", "state", "mAP50", "mAP50-95", "images", "gt");
  for (SeaState s : kAllSeaStates) {
    const auto& m = report.at(s);
    out += fmt::format("{:<6}{:>10}{:>10}{:>10}{:>8}\n", sea_state_name(s), fmt_metric(m.map50),
                       fmt_metric(m.map50_95), m.n_images, m.n_gt);
  }
  out += fmt::format("{:<6}{:>10}{:>10}\n", "mean", fmt_metric(report.mean_map50()),
                     fmt_metric(report.mean_map50_95()));
  return out;
}

std::string format_chart_table(const EvalReport& report) {
  std::string out = "metric,SS1,SS2,SS3,SS4\n";
  for (const auto& [name, member] : {std::pair{"mAP50", &StateMetrics::map50},
                                     std::pair{"mAP50-95", &StateMetrics::map50_95}}) {
    out += name;
    for (const auto& m : report.per_state) out += "," + fmt_metric(m.*member);
    out += '\n';
  }
  return out;
}

}  // namespace seaforge
