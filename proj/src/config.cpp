#include "seaforge/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "seaforge/error.hpp"

namespace seaforge {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const toml::table& table, const std::string& where, const std::set<std::string>& known) {
  for (const auto& [key, _] : table) {
    if (!known.contains(std::string(key.str()))) {
      throw Error(Errc::config_error, "unknown key '" + std::string(key.str()) + "' in [" + where + "]");
    }
  }
}

template <typename T>
void read(const toml::table& table, const char* key, T& out) {
  const toml::node* node = table.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) { out = *v; return; }
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = node->value<std::int64_t>()) { out = static_cast<T>(*v); return; }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node->value<double>()) { out = *v; return; }
  } else {
    if (auto v = node->value<std::string>()) { out = *v; return; }
  }
  throw Error(Errc::config_error, std::string("key '") + key + "' has the wrong type");
}

void read_path(const toml::table& table, const char* key, fs::path& out, const fs::path& base) {
  std::string text;
  read(table, key, text);
  if (text.empty()) return;
  fs::path p(text);
  out = (p.is_relative() && !base.empty()) ? base / p : p;
}

nlohmann::json to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = to_json(v);
    return j;
  }
  if (auto a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(to_json(v));
    return j;
  }
  if (auto v = node.value<bool>(); v && node.is_boolean()) return *v;
  if (node.is_integer()) return *node.value<std::int64_t>();
  if (node.is_floating_point()) return *node.value<double>();
  if (node.is_string()) return *node.value<std::string>();
  throw Error(Errc::config_error, "unsupported value in backend.params");
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    throw Error(Errc::config_error, msg.str());
  }
  reject_unknown(root, "", {"backend", "classifier", "checker", "pipeline"});

  PipelineConfig cfg;
  if (auto* b = root["backend"].as_table()) {
    reject_unknown(*b, "backend", {"name", "endpoint", "timeout_s", "batch_size", "mask_polarity", "params", "mock"});
    read(*b, "name", cfg.backend.name);
    read(*b, "endpoint", cfg.backend.endpoint);
    read(*b, "timeout_s", cfg.backend.timeout_s);
    read(*b, "batch_size", cfg.backend.batch_size);
    std::string polarity;
    read(*b, "mask_polarity", polarity);
    if (!polarity.empty()) cfg.backend.mask_polarity = parse_mask_polarity(polarity);
    if (auto* p = (*b)["params"].as_table()) cfg.backend.params = to_json(*p);
    if (auto* m = (*b)["mock"].as_table()) {
      reject_unknown(*m, "backend.mock",
                     {"corrupt_objects", "corrupt_every", "roughness", "native_width", "native_height"});
      read(*m, "corrupt_objects", cfg.backend.mock.corrupt_objects);
      read(*m, "corrupt_every", cfg.backend.mock.corrupt_every);
      if (m->contains("roughness")) {
        double r = 0;
        read(*m, "roughness", r);
        cfg.backend.mock.roughness = r;
      }
      read(*m, "native_width", cfg.backend.mock.native_width);
      read(*m, "native_height", cfg.backend.mock.native_height);
    }
  }
  if (auto* c = root["classifier"].as_table()) {
    reject_unknown(*c, "classifier", {"mode", "model_path", "input_resolution", "seed"});
    std::string mode;
    read(*c, "mode", mode);
    if (!mode.empty()) cfg.classifier.mode = parse_classifier_mode(mode);
    read_path(*c, "model_path", cfg.classifier.model_path, base_dir);
    read(*c, "input_resolution", cfg.classifier.input_resolution);
    read(*c, "seed", cfg.classifier.seed);
  }
  if (auto* c = root["checker"].as_table()) {
    reject_unknown(*c, "checker", {"mode", "model_path", "threshold", "difference_scale"});
    std::string mode;
    read(*c, "mode", mode);
    if (!mode.empty()) cfg.checker.mode = parse_classifier_mode(mode);
    read_path(*c, "model_path", cfg.checker.model_path, base_dir);
    read(*c, "threshold", cfg.checker.threshold);
    read(*c, "difference_scale", cfg.checker.difference_scale);
  }
  if (auto* p = root["pipeline"].as_table()) {
    reject_unknown(*p, "pipeline",
                   {"images_per_source", "seed", "output_root", "keep_discarded", "workers", "audit",
                    "mask_dilation", "annotations", "image_root"});
    read(*p, "images_per_source", cfg.images_per_source);
    read(*p, "seed", cfg.seed);
    read_path(*p, "output_root", cfg.output_root, base_dir);
    read(*p, "keep_discarded", cfg.keep_discarded);
    read(*p, "workers", cfg.workers);
    read(*p, "audit", cfg.audit);
    read(*p, "mask_dilation", cfg.mask_dilation);
    read_path(*p, "annotations", cfg.annotations, base_dir);
    read_path(*p, "image_root", cfg.image_root, base_dir);
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::config_error, "cannot read config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pipeline_config(buf.str(), file.parent_path());
}

}  // namespace seaforge
