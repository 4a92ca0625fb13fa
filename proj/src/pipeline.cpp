#include "seaforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "seaforge/annotations.hpp"
#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/mask.hpp"
#include "seaforge/rng.hpp"

namespace seaforge {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const PipelineConfig& c) {
  if (c.images_per_source < 1) throw Error(Errc::config_error, "images_per_source must be >= 1");
  if (c.workers < 1) throw Error(Errc::config_error, "workers must be >= 1");
  if (c.backend.batch_size < 1) throw Error(Errc::config_error, "backend.batch_size must be >= 1");
  if (c.mask_dilation < 0) throw Error(Errc::config_error, "mask dilation must be >= 0");
  if (c.output_root.empty()) throw Error(Errc::config_error, "output_root is empty");
}

EditedImage resize_to_source(const EditedImage& edited, const SourceImage& source) {
  if (edited.pixels.empty()) throw Error(Errc::unreadable_image, "edited image " + edited.id + " has no pixels");
  EditedImage out = edited;
  if (edited.pixels.cols != source.width || edited.pixels.rows != source.height) {
    cv::resize(edited.pixels, out.pixels, cv::Size(source.width, source.height), 0, 0, cv::INTER_LINEAR);
  }
  out.width = out.pixels.cols;
  out.height = out.pixels.rows;
  return out;
}

bool filter_decision(std::span<const Verdict> verdicts) {
  return std::any_of(verdicts.begin(), verdicts.end(), [](Verdict v) { return v == Verdict::boat; });
}

bool filter_decision(std::span<const CheckerVerdict> verdicts) {
  return std::any_of(verdicts.begin(), verdicts.end(),
                     [](const CheckerVerdict& v) { return v.verdict == Verdict::boat; });
}

double passing_rate(const DatasetStats& stats) {
  const auto generated = stats.total_generated();
  if (generated == 0) throw Error(Errc::empty_manifest, "no generated images to rate");
  return 100.0 * static_cast<double>(stats.total_filtered()) / static_cast<double>(generated);
}

std::int64_t source_seed(std::int64_t run_seed, const std::string& source_id) {
  // 31 bits leaves headroom for + generation index in any signed consumer.
  return static_cast<std::int64_t>(splitmix64(static_cast<std::uint64_t>(run_seed) ^ fnv1a(source_id)) >> 33);
}

fs::path manifest_path(const fs::path& output_root) { return output_root / "manifest.jsonl"; }

fs::path kept_image_path(const fs::path& output_root, SeaState state, const std::string& edited_id) {
  return output_root / std::string(sea_state_name(state)) / (edited_id + ".png");
}

fs::path discarded_image_path(const fs::path& output_root, const std::string& edited_id) {
  return output_root / "discarded" / (edited_id + ".png");
}

json to_json(const RunSummary& s) {
  json generated = json::object(), filtered = json::object();
  for (SeaState st : kAllSeaStates) {
    generated[std::string(sea_state_name(st))] = s.stats.generated_per_state[index_of(st)];
    filtered[std::string(sea_state_name(st))] = s.stats.filtered_per_state[index_of(st)];
  }
  json rate = nullptr;
  if (s.stats.total_generated() > 0) rate = passing_rate(s.stats);
  json failures = json::array();
  for (const auto& f : s.failures) {
    failures.push_back({{"source_id", f.source_id}, {"edited_id", f.edited_id}, {"error", f.error}});
  }
  return json{{"generated_per_state", generated},
              {"filtered_per_state", filtered},
              {"total_generated", s.stats.total_generated()},
              {"total_filtered", s.stats.total_filtered()},
              {"passing_rate", rate},
              {"sources_total", s.sources_total},
              {"sources_skipped_no_boats", s.sources_skipped_no_boats},
              {"records_total", s.records_total},
              {"item_failures", s.item_failures},
              {"failures", failures}};
}

namespace {

struct Shared {
  const PipelineConfig& config;
  const GenerationBackend& backend;
  const SeaStateClassifier& classifier;
  const PreservationChecker& checker;
  const PromptBank prompts = PromptBank::defaults();
  const std::unordered_set<std::string>& existing;
  ManifestWriter& manifest;
  JsonlAppender& failure_log;

  std::mutex mu;
  RunSummary summary;

  void fail(const std::string& source_id, const std::string& edited_id, const std::string& error) {
    spdlog::warn("{} {}: {}", source_id, edited_id, error);
    failure_log.append_line(json{{"source_id", source_id}, {"edited_id", edited_id}, {"error", error}}.dump());
    std::lock_guard lock(mu);
    ++summary.item_failures;
    summary.failures.push_back({source_id, edited_id, error});
  }
};

ManifestRecord process_output(Shared& ctx, const SourceImage& src, const cv::Mat& source_pixels,
                              const EditedImage& raw) {
  const PipelineConfig& cfg = ctx.config;
  // Classification sees the image as generated, before the resize.
  const SeaStateResult sea = ctx.classifier.classify(raw);
  EditedImage edited = resize_to_source(raw, src);
  edited.sea_state = sea.state;

  std::vector<CropVerdictEntry> verdicts;
  for (const Crop& crop : extract_positive_crops(edited, src, source_pixels)) {
    const CheckerVerdict v = ctx.checker.check(crop);
    verdicts.push_back({v.box_index, v.verdict});
    if (v.verdict == Verdict::boat && !cfg.audit) break;
  }
  std::vector<Verdict> plain;
  for (const auto& v : verdicts) plain.push_back(v.verdict);
  const bool keep = filter_decision(plain);

  if (keep) {
    write_png(kept_image_path(cfg.output_root, sea.state, edited.id), edited.pixels);
  } else if (cfg.keep_discarded) {
    write_png(discarded_image_path(cfg.output_root, edited.id), edited.pixels);
  }

  ManifestRecord rec;
  rec.edited_id = edited.id;
  rec.source_id = src.id;
  rec.backend_name = edited.backend_name;
  rec.prompt = edited.prompt;
  rec.seed = edited.seed;
  rec.sea_state = sea.state;
  rec.crop_verdicts = std::move(verdicts);
  rec.kept = keep;
  rec.created_at = utc_timestamp();
  return rec;
}

void process_source(Shared& ctx, const SourceImage& src) {
  const PipelineConfig& cfg = ctx.config;
  if (src.boat_count() == 0) {
    spdlog::warn("source {} has no boat boxes; skipped", src.id);
    std::lock_guard lock(ctx.mu);
    ++ctx.summary.sources_skipped_no_boats;
    return;
  }

  std::vector<int> missing;
  for (int g = 0; g < cfg.images_per_source; ++g) {
    if (!ctx.existing.contains(edited_image_id(src.id, g))) missing.push_back(g);
  }
  {
    std::lock_guard lock(ctx.mu);
    ctx.summary.records_resumed += static_cast<std::size_t>(cfg.images_per_source) - missing.size();
  }
  if (missing.empty()) return;

  cv::Mat pixels;
  try {
    pixels = load_source_pixels(src);
  } catch (const Error& e) {
    for (int g : missing) ctx.fail(src.id, edited_image_id(src.id, g), e.what());
    return;
  }
  const EditMask mask = build_mask(src, cfg.mask_dilation);
  const std::int64_t base_seed = source_seed(cfg.seed, src.id);
  const int chunk = uses_per_state_prompts(cfg.backend) ? 1 : cfg.backend.batch_size;

  // Contiguous runs of missing generations, split into requests of at most `chunk`.
  std::size_t i = 0;
  while (i < missing.size()) {
    std::size_t j = i + 1;
    while (j < missing.size() && missing[j] == missing[j - 1] + 1 && static_cast<int>(j - i) < chunk) ++j;
    GenerationRequest req;
    req.source = src;
    req.source_pixels = pixels;
    req.mask = mask;
    req.first_index = missing[i];
    req.batch_size = static_cast<int>(j - i);
    req.seed = base_seed + req.first_index;
    req.prompt = prompt_for(cfg.backend, ctx.prompts, req.first_index);
    req.id_prefix = src.id;

    std::vector<EditedImage> outputs;
    try {
      outputs = ctx.backend.generate(req);
    } catch (const Error& e) {
      for (std::size_t k = i; k < j; ++k) ctx.fail(src.id, edited_image_id(src.id, missing[k]), e.what());
      i = j;
      continue;
    }
    for (const auto& out : outputs) {
      ManifestRecord rec;
      try {
        rec = process_output(ctx, src, pixels, out);
      } catch (const Error& e) {
        ctx.fail(src.id, out.id, e.what());
        continue;
      } catch (const cv::Exception& e) {
        ctx.fail(src.id, out.id, e.what());
        continue;
      }
      ctx.manifest.append(rec);  // manifest I/O failure aborts the run
      std::lock_guard lock(ctx.mu);
      ++ctx.summary.records_written;
    }
    i = j;
  }
}

}  // namespace

RunSummary run_pipeline(std::span<const SourceImage> sources, const PipelineConfig& config,
                        const GenerationBackend* backend) {
  validate(config);
  fs::create_directories(config.output_root);

  std::unique_ptr<GenerationBackend> owned;
  if (!backend) {
    owned = make_backend(config.backend);
    backend = owned.get();
  }
  const SeaStateClassifier classifier = SeaStateClassifier::load(config.classifier);
  const PreservationChecker checker = PreservationChecker::load(config.checker);

  const fs::path manifest = manifest_path(config.output_root);
  std::unordered_set<std::string> existing;
  for (const auto& r : load_manifest(manifest).records) existing.insert(r.edited_id);

  ManifestWriter writer(manifest);
  JsonlAppender failure_log(config.output_root / "failures.jsonl");
  Shared ctx{config, *backend, classifier, checker, PromptBank::defaults(), existing, writer, failure_log, {}, {}};
  ctx.summary.sources_total = sources.size();

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < sources.size(); k = next++) {
      try {
        process_source(ctx, sources[k]);
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        next = sources.size();
      }
    }
  };
  const int n_workers = std::min<int>(config.workers, std::max<int>(1, static_cast<int>(sources.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  RunSummary summary = std::move(ctx.summary);
  std::sort(summary.failures.begin(), summary.failures.end(), [](const ItemFailure& a, const ItemFailure& b) {
    return std::tie(a.source_id, a.edited_id) < std::tie(b.source_id, b.edited_id);
  });
  const auto all = load_manifest(manifest);
  summary.stats = compute_stats(all.records);
  summary.records_total = all.records.size();

  std::ofstream out(config.output_root / "run_summary.json");
  if (!out) throw Error(Errc::io_failure, "cannot write run_summary.json");
  out << to_json(summary).dump(2) << '\n';
  spdlog::info("run complete: {} records ({} new, {} resumed), {} failures, {} kept", summary.records_total,
               summary.records_written, summary.records_resumed, summary.item_failures,
               summary.stats.total_filtered());
  return summary;
}

}  // namespace seaforge
