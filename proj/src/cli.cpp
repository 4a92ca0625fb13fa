#include "seaforge/cli.hpp"

#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "seaforge/annotations.hpp"
#include "seaforge/config.hpp"
#include "seaforge/error.hpp"
#include "seaforge/eval.hpp"
#include "seaforge/fixtures.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/mask.hpp"
#include "seaforge/pipeline.hpp"
#include "seaforge/review_server.hpp"

namespace seaforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by every subcommand. Optional values only override the config when given.
struct CommonFlags {
  std::optional<std::int64_t> seed;
  std::string config;
  std::optional<int> workers;
  std::string output;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "Random seed (overrides the config)");
    app->add_option("--config", config, "TOML configuration file")->check(CLI::ExistingFile);
    app->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    app->add_option("--output", output, "Output location (overrides the config)");
  }

  PipelineConfig load() const {
    PipelineConfig cfg = config.empty() ? PipelineConfig{} : load_pipeline_config(config);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (!output.empty()) cfg.output_root = output;
    return cfg;
  }
};

struct DatasetFlags {
  std::string annotations;
  std::string images;

  void attach(CLI::App* app) {
    app->add_option("--annotations", annotations, "COCO-style annotation file (overrides the config)");
    app->add_option("--images", images, "Image root for the annotation file (overrides the config)");
  }

  std::vector<SourceImage> load(const PipelineConfig& cfg) const {
    const fs::path ann = annotations.empty() ? cfg.annotations : fs::path(annotations);
    fs::path root = images.empty() ? cfg.image_root : fs::path(images);
    if (ann.empty()) throw CLI::RequiredError("--annotations");
    if (root.empty()) root = ann.parent_path();
    SourceDataset ds = load_source_dataset(ann, root);
    for (const auto& w : ds.warnings) spdlog::warn("{}: {}", w.record_id, w.message);
    return std::move(ds.images);
  }
};

std::string state_table(const DatasetStats& stats) {
  std::string out = fmt::format("{:<12}{:>10}{:>10}{:>10}{:>10}{:>12}\n", "", "SS1", "SS2", "SS3", "SS4", "total");
  out += fmt::format("{:<12}{:>10}{:>10}{:>10}{:>10}{:>12}\n", "generated", stats.generated_per_state[0],
                     stats.generated_per_state[1], stats.generated_per_state[2], stats.generated_per_state[3],
                     stats.total_generated());
  out += fmt::format("{:<12}{:>10}{:>10}{:>10}{:>10}{:>12}\n", "filtered", stats.filtered_per_state[0],
                     stats.filtered_per_state[1], stats.filtered_per_state[2], stats.filtered_per_state[3],
                     stats.total_filtered());
  return out;
}

json stats_json(const DatasetStats& stats) {
  json gen = json::object(), fil = json::object();
  for (SeaState s : kAllSeaStates) {
    gen[std::string(sea_state_name(s))] = stats.generated_per_state[index_of(s)];
    fil[std::string(sea_state_name(s))] = stats.filtered_per_state[index_of(s)];
  }
  return {{"generated_per_state", gen},
          {"filtered_per_state", fil},
          {"total_generated", stats.total_generated()},
          {"total_filtered", stats.total_filtered()},
          {"passing_rate", stats.total_generated() ? json(passing_rate(stats)) : json(nullptr)}};
}

void add_train_flags(CLI::App* app, nn::TrainOptions& o) {
  app->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--batch-size", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--lr", o.learning_rate, "Adam learning rate (no decay)")->capture_default_str();
  app->add_option("--test-fraction", o.test_fraction, "Held-out fraction per class")->capture_default_str();
  app->add_option("--input-size", o.shape.input_size, "Network input resolution")->capture_default_str();
}

GroundTruth ground_truth_of(std::span<const SourceImage> sources) {
  GroundTruth gt;
  for (const auto& s : sources) gt[s.id] = s.boxes;
  return gt;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"seaforge: sea-state synthetic data pipeline", "seaforge"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // mask
  CommonFlags mask_common;
  DatasetFlags mask_data;
  int mask_dilation = 0;
  auto* mask = app.add_subcommand("mask", "Write <source_id>.mask.png edit masks");
  mask_common.attach(mask);
  mask_data.attach(mask);
  mask->add_option("--dilation", mask_dilation, "Box dilation in pixels")->check(CLI::NonNegativeNumber);

  // generate
  CommonFlags gen_common;
  DatasetFlags gen_data;
  std::optional<int> gen_count;
  std::string gen_backend;
  auto* generate = app.add_subcommand("generate", "Run the generation backend only and save raw outputs");
  gen_common.attach(generate);
  gen_data.attach(generate);
  generate->add_option("--count", gen_count, "Generations per source (overrides the config)");
  generate->add_option("--backend", gen_backend, "mock, bld-style or inpaint-style (overrides the config)");

  // classify
  CommonFlags cls_common;
  std::vector<std::string> cls_images;
  std::string cls_mode, cls_model;
  bool cls_json = false;
  auto* classify = app.add_subcommand("classify", "Assign a sea state to images");
  cls_common.attach(classify);
  classify->add_option("images", cls_images, "Image files")->required()->check(CLI::ExistingFile);
  classify->add_option("--mode", cls_mode, "learned or synthetic_feature (overrides the config)");
  classify->add_option("--model", cls_model, "Model directory for learned mode");
  classify->add_flag("--json", cls_json, "Machine-readable output");

  // check
  CommonFlags chk_common;
  DatasetFlags chk_data;
  std::string chk_edited, chk_source_id, chk_mode, chk_model;
  bool chk_json = false;
  auto* check = app.add_subcommand("check", "Check whether the boats of a source survive in an edited image");
  chk_common.attach(check);
  chk_data.attach(check);
  check->add_option("--edited", chk_edited, "Edited image file")->required()->check(CLI::ExistingFile);
  check->add_option("--source-id", chk_source_id, "Id of the source image in the annotations")->required();
  check->add_option("--mode", chk_mode, "learned or synthetic_feature (overrides the config)");
  check->add_option("--model", chk_model, "Model directory for learned mode");
  check->add_flag("--json", chk_json, "Machine-readable output");

  // run
  CommonFlags run_common;
  DatasetFlags run_data;
  std::optional<int> run_count;
  std::string run_backend;
  bool run_corrupt = false, run_keep = false, run_audit = false;
  auto* run = app.add_subcommand("run", "Full pipeline: generate, classify, resize, check, keep or discard");
  run_common.attach(run);
  run_data.attach(run);
  run->add_option("--images-per-source", run_count, "Generations per source (overrides the config)");
  run->add_option("--backend", run_backend, "mock, bld-style or inpaint-style (overrides the config)");
  run->add_flag("--corrupt-objects", run_corrupt, "Mock only: overwrite object pixels");
  run->add_flag("--keep-discarded", run_keep, "Also store discarded images under discarded/");
  run->add_flag("--audit", run_audit, "Check every crop instead of stopping at the first boat");

  // stats
  CommonFlags stats_common;
  std::string stats_manifest;
  bool stats_as_json = false;
  auto* stats = app.add_subcommand("stats", "Per-state generated and filtered counts plus the passing rate");
  stats_common.attach(stats);
  stats->add_option("--manifest", stats_manifest, "Manifest file (default: <output>/manifest.jsonl)");
  stats->add_flag("--json", stats_as_json, "Machine-readable output");

  // train-seastate
  CommonFlags tss_common;
  std::string tss_corpus;
  nn::TrainOptions tss_opts = default_sea_state_train_options();
  auto* train_ss = app.add_subcommand("train-seastate", "Train the four-level sea-state classifier");
  tss_common.attach(train_ss);
  train_ss->add_option("--corpus", tss_corpus, "Directory with SS1..SS4 subdirectories")->required();
  add_train_flags(train_ss, tss_opts);

  // train-checker
  CommonFlags tck_common;
  std::string tck_pos, tck_neg;
  bool tck_blur = false;
  nn::TrainOptions tck_opts = default_checker_train_options();
  auto* train_ck = app.add_subcommand("train-checker", "Train the boat / not-boat preservation checker");
  tck_common.attach(train_ck);
  train_ck->add_option("--positives", tck_pos, "Directory of boat crops")->required();
  train_ck->add_option("--negatives", tck_neg, "Directory of not-boat crops")->required();
  train_ck->add_flag("--blur", tck_blur, "Add blur augmentation to boat crops");
  add_train_flags(train_ck, tck_opts);

  // build-negatives
  CommonFlags neg_common;
  DatasetFlags neg_data;
  std::string neg_run;
  NegativeSetOptions neg_opts;
  auto* negatives = app.add_subcommand("build-negatives", "Build the two-class crop corpus for the checker");
  neg_common.attach(negatives);
  neg_data.attach(negatives);
  negatives->add_option("--run", neg_run, "Pipeline output root holding manifest.jsonl and images")->required();
  negatives->add_option("--background-per-image", neg_opts.background_per_image, "Background crops per image");
  negatives->add_flag("!--no-quarter", neg_opts.quarter_negatives, "Skip quarter-overlap negatives");
  negatives->add_flag("!--no-positives", neg_opts.include_positives, "Skip boat crops from the sources");

  // eval
  CommonFlags ev_common;
  DatasetFlags ev_data;
  std::string ev_manifest, ev_detections;
  bool ev_json = false, ev_chart = false;
  auto* evaluate_cmd = app.add_subcommand("eval", "Per-sea-state mAP of a detections file");
  ev_common.attach(evaluate_cmd);
  ev_data.attach(evaluate_cmd);
  evaluate_cmd->add_option("--manifest", ev_manifest, "Manifest file (default: <output>/manifest.jsonl)");
  evaluate_cmd->add_option("--detections", ev_detections, "image_id,x,y,w,h,score[,class] per line")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_flag("--json", ev_json, "Machine-readable output");
  evaluate_cmd->add_flag("--chart", ev_chart, "Print the per-state chart table");

  // review serve
  auto* review = app.add_subcommand("review", "Human review service");
  review->require_subcommand(1);
  CommonFlags rv_common;
  std::string rv_manifest, rv_store, rv_host = "127.0.0.1";
  int rv_port = 8080;
  auto* serve = review->add_subcommand("serve", "Serve the review HTTP API");
  rv_common.attach(serve);
  serve->add_option("--manifest", rv_manifest, "Manifest file (default: <output>/manifest.jsonl)");
  serve->add_option("--store", rv_store, "Review ledger directory (default: <output>/review)");
  serve->add_option("--host", rv_host, "Bind address");
  serve->add_option("--port", rv_port, "Port");

  // fixtures
  CommonFlags fx_common;
  int fx_count = 12, fx_width = 96, fx_height = 64, fx_boats = 2, fx_corpus = 10;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Write procedural demo data (sources and toy corpora)");
  fx_common.attach(fixtures_cmd);
  fixtures_cmd->add_option("--count", fx_count, "Source images");
  fixtures_cmd->add_option("--width", fx_width, "Source width");
  fixtures_cmd->add_option("--height", fx_height, "Source height");
  fixtures_cmd->add_option("--boats", fx_boats, "Boats per source");
  fixtures_cmd->add_option("--corpus-size", fx_corpus, "Images per class in the toy corpora");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) {
      failing = sub;
      for (const CLI::App* nested : sub->get_subcommands()) failing = nested;
    }
    err << failing->help();
    return 1;
  }

  try {
    if (mask->parsed()) {
      const PipelineConfig cfg = mask_common.load();
      const auto sources = mask_data.load(cfg);
      const fs::path dir = mask_common.output.empty() ? cfg.output_root / "masks" : fs::path(mask_common.output);
      for (const auto& s : sources) save_mask(mask_path_for(s, dir), build_mask(s, mask_dilation));
      out << fmt::format("wrote {} masks to {}\n", sources.size(), dir.string());
    } else if (generate->parsed()) {
      PipelineConfig cfg = gen_common.load();
      if (gen_count) cfg.images_per_source = *gen_count;
      if (!gen_backend.empty()) cfg.backend.name = gen_backend;
      validate(cfg);
      const auto sources = gen_data.load(cfg);
      const auto backend = make_backend(cfg.backend);
      const PromptBank bank = PromptBank::defaults();
      std::size_t written = 0;
      for (const auto& s : sources) {
        if (s.boat_count() == 0) continue;
        GenerationRequest req;
        req.source = s;
        req.source_pixels = load_source_pixels(s);
        req.mask = build_mask(s, cfg.mask_dilation);
        req.id_prefix = s.id;
        const int chunk = uses_per_state_prompts(cfg.backend) ? 1 : cfg.backend.batch_size;
        for (int first = 0; first < cfg.images_per_source; first += chunk) {
          req.first_index = first;
          req.batch_size = std::min(chunk, cfg.images_per_source - first);
          req.seed = source_seed(cfg.seed, s.id) + first;
          req.prompt = prompt_for(cfg.backend, bank, first);
          for (const auto& img : backend->generate(req)) {
            write_png(cfg.output_root / "generated" / (img.id + ".png"), img.pixels);
            ++written;
          }
        }
      }
      out << fmt::format("wrote {} images to {}\n", written, (cfg.output_root / "generated").string());
    } else if (classify->parsed()) {
      PipelineConfig cfg = cls_common.load();
      if (!cls_mode.empty()) cfg.classifier.mode = parse_classifier_mode(cls_mode);
      if (!cls_model.empty()) cfg.classifier.model_path = cls_model;
      const auto classifier = SeaStateClassifier::load(cfg.classifier);
      json rows = json::array();
      for (const auto& path : cls_images) {
        const auto r = classifier.classify(fs::path(path));
        if (cls_json) {
          rows.push_back({{"image", path}, {"sea_state", level(r.state)}, {"scores", r.scores.scores}});
        } else {
          out << fmt::format("{}\t{}\t{:.4f} {:.4f} {:.4f} {:.4f}\n", path, sea_state_name(r.state),
                             r.scores.scores[0], r.scores.scores[1], r.scores.scores[2], r.scores.scores[3]);
        }
      }
      if (cls_json) out << rows.dump(2) << '\n';
    } else if (check->parsed()) {
      PipelineConfig cfg = chk_common.load();
      if (!chk_mode.empty()) cfg.checker.mode = parse_classifier_mode(chk_mode);
      if (!chk_model.empty()) cfg.checker.model_path = chk_model;
      const auto sources = chk_data.load(cfg);
      const auto it = std::find_if(sources.begin(), sources.end(),
                                   [&](const SourceImage& s) { return s.id == chk_source_id; });
      if (it == sources.end()) throw Error(Errc::unknown_image_id, "no source '" + chk_source_id + "'");
      EditedImage edited;
      edited.id = fs::path(chk_edited).stem().string();
      edited.pixels = read_image(chk_edited);
      edited = resize_to_source(edited, *it);
      const auto checker = PreservationChecker::load(cfg.checker);
      std::vector<CheckerVerdict> verdicts;
      for (const auto& crop : extract_positive_crops(edited, *it, load_source_pixels(*it))) {
        verdicts.push_back(checker.check(crop));
      }
      const bool keep = filter_decision(verdicts);
      if (chk_json) {
        json rows = json::array();
        for (const auto& v : verdicts) {
          rows.push_back({{"box_index", v.box_index}, {"verdict", verdict_name(v.verdict)}, {"confidence", v.confidence}});
        }
        out << json{{"crop_verdicts", rows}, {"kept", keep}}.dump(2) << '\n';
      } else {
        for (const auto& v : verdicts) {
          out << fmt::format("box {}\t{}\t{:.4f}\n", v.box_index, verdict_name(v.verdict), v.confidence);
        }
        out << (keep ? "keep\n" : "discard\n");
      }
    } else if (run->parsed()) {
      PipelineConfig cfg = run_common.load();
      if (run_count) cfg.images_per_source = *run_count;
      if (!run_backend.empty()) cfg.backend.name = run_backend;
      if (run_corrupt) cfg.backend.mock.corrupt_objects = true;
      if (run_keep) cfg.keep_discarded = true;
      if (run_audit) cfg.audit = true;
      validate(cfg);
      const auto sources = run_data.load(cfg);
      const RunSummary summary = run_pipeline(sources, cfg);
      out << state_table(summary.stats);
      if (summary.stats.total_generated() > 0) {
        out << fmt::format("passing rate: {:.2f}%\n", passing_rate(summary.stats));
      }
      out << fmt::format("records: {} ({} new, {} resumed), failures: {}\n", summary.records_total,
                         summary.records_written, summary.records_resumed, summary.item_failures);
      out << "manifest: " << manifest_path(cfg.output_root).string() << '\n';
    } else if (stats->parsed()) {
      const PipelineConfig cfg = stats_common.load();
      const fs::path manifest = stats_manifest.empty() ? manifest_path(cfg.output_root) : fs::path(stats_manifest);
      if (!fs::exists(manifest)) throw Error(Errc::io_failure, manifest.string() + " does not exist");
      const DatasetStats s = compute_stats(manifest);
      if (stats_as_json) {
        out << stats_json(s).dump(2) << '\n';
      } else {
        out << state_table(s);
        out << fmt::format("passing rate: {:.2f}%\n", passing_rate(s));
      }
    } else if (train_ss->parsed()) {
      const PipelineConfig cfg = tss_common.load();
      tss_opts.seed = static_cast<std::uint64_t>(cfg.seed);
      const fs::path dest = tss_common.output.empty() ? cfg.output_root / "sea_state_model" : fs::path(tss_common.output);
      const auto report = train_sea_state_classifier(tss_corpus, tss_opts, dest,
                                                     [&](const std::string& line) { out << line << '\n'; });
      out << fmt::format("held-out accuracy: {:.4f} ({} test images)\nmodel: {}\n", report.test_accuracy,
                         report.test_count, dest.string());
    } else if (train_ck->parsed()) {
      const PipelineConfig cfg = tck_common.load();
      tck_opts.seed = static_cast<std::uint64_t>(cfg.seed);
      const fs::path dest = tck_common.output.empty() ? cfg.output_root / "checker_model" : fs::path(tck_common.output);
      const auto report = train_checker(tck_pos, tck_neg, tck_opts, dest, tck_blur,
                                        [&](const std::string& line) { out << line << '\n'; });
      out << fmt::format("held-out accuracy: {:.4f} ({} test crops)\nmodel: {}\n", report.test_accuracy,
                         report.test_count, dest.string());
    } else if (negatives->parsed()) {
      const PipelineConfig cfg = neg_common.load();
      neg_opts.seed = static_cast<std::uint64_t>(cfg.seed);
      const auto sources = neg_data.load(cfg);
      std::map<std::string, const SourceImage*> by_id;
      for (const auto& s : sources) by_id[s.id] = &s;
      std::vector<CropImage> src_images, edited_images;
      for (const auto& s : sources) src_images.push_back({s.id, load_source_pixels(s), s.boxes});
      for (const auto& r : load_manifest(manifest_path(neg_run)).records) {
        const auto it = by_id.find(r.source_id);
        if (it == by_id.end()) continue;
        const fs::path file = locate_edited_image(neg_run, r);
        if (!fs::exists(file)) continue;
        edited_images.push_back({r.edited_id, read_image(file), it->second->boxes});
      }
      const fs::path dest = neg_common.output.empty() ? cfg.output_root / "checker_corpus" : fs::path(neg_common.output);
      const auto report = build_negative_set(src_images, edited_images, neg_opts, dest);
      out << fmt::format("boat: {}  quarter_negative: {}  background_negative: {}  skipped: {}\ncorpus: {}\n",
                         report.positives, report.quarter_negatives, report.background_negatives, report.skipped,
                         dest.string());
    } else if (evaluate_cmd->parsed()) {
      const PipelineConfig cfg = ev_common.load();
      const fs::path manifest = ev_manifest.empty() ? manifest_path(cfg.output_root) : fs::path(ev_manifest);
      const auto records = load_manifest(manifest).records;
      const auto sources = ev_data.load(cfg);
      const EvalReport report = evaluate(records, ground_truth_of(sources), load_detections(ev_detections));
      if (ev_json) {
        json j = to_json(report);
        if (ev_chart) j["chart"] = format_chart_table(report);
        out << j.dump(2) << '\n';
      } else {
        out << format_report(report);
        if (ev_chart) out << '\n' << format_chart_table(report);
      }
    } else if (serve->parsed()) {
      const PipelineConfig cfg = rv_common.load();
      const fs::path manifest = rv_manifest.empty() ? manifest_path(cfg.output_root) : fs::path(rv_manifest);
      const fs::path store_dir = rv_store.empty() ? cfg.output_root / "review" : fs::path(rv_store);
      auto store = std::make_shared<ReviewStore>(store_dir, manifest);
      ReviewServer server(store, cfg.output_root);
      server.listen(rv_host, rv_port);
    } else if (fixtures_cmd->parsed()) {
      const PipelineConfig cfg = fx_common.load();
      const fs::path root = fx_common.output.empty() ? fs::path("fixtures") : fs::path(fx_common.output);
      const auto seed = static_cast<std::uint64_t>(cfg.seed);
      const auto ds = fixtures::write_source_dataset(root / "sources", fx_count, fx_width, fx_height, seed, fx_boats);
      fixtures::write_sea_state_corpus(root / "sea_state_corpus", fx_corpus, 32, seed);
      fixtures::write_checker_corpus(root / "checker_corpus", fx_corpus, 32, seed);
      out << fmt::format("annotations: {}\nimages: {}\nsea-state corpus: {}\nchecker corpus: {}\n",
                         ds.annotations.string(), ds.image_root.string(), (root / "sea_state_corpus").string(),
                         (root / "checker_corpus").string());
    }
  } catch (const CLI::RequiredError& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace seaforge
