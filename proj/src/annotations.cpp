#include "seaforge/annotations.hpp"

#include <fstream>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"

namespace seaforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(Errc::malformed_annotation, "id must be an integer or string");
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::malformed_annotation, where + " lacks '" + key + "'");
  return *it;
}

SourceDataset parse_dataset(const json& doc, const fs::path& image_root);

}  // namespace

SourceDataset load_source_dataset(const fs::path& annotation_file, const fs::path& image_root) {
  std::ifstream in(annotation_file);
  if (!in) throw Error(Errc::io_failure, "cannot open " + annotation_file.string());
  try {
    return parse_dataset(json::parse(in), image_root);
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_annotation, annotation_file.string() + ": " + e.what());
  }
}

namespace {

SourceDataset parse_dataset(const json& doc, const fs::path& image_root) {
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    throw Error(Errc::malformed_annotation, "top-level 'images' array missing");
  }

  std::unordered_map<std::string, std::string> category_names;
  if (auto it = doc.find("categories"); it != doc.end()) {
    if (!it->is_array()) throw Error(Errc::malformed_annotation, "'categories' must be an array");
    for (const auto& c : *it) {
      category_names[id_string(require(c, "id", "category"))] =
          require(c, "name", "category").get<std::string>();
    }
  }

  SourceDataset out;
  std::map<std::string, std::size_t> index_by_id;
  for (const auto& img : doc.at("images")) {
    SourceImage src;
    src.id = id_string(require(img, "id", "image"));
    const auto file_name = require(img, "file_name", "image " + src.id).get<std::string>();
    src.path = image_root / file_name;
    if (!fs::exists(src.path)) throw Error(Errc::missing_image, src.path.string());
    if (img.contains("width") && img.contains("height")) {
      src.width = img["width"].get<int>();
      src.height = img["height"].get<int>();
    } else {
      const cv::Mat probe = read_image(src.path);
      src.width = probe.cols;
      src.height = probe.rows;
    }
    if (src.width <= 0 || src.height <= 0) {
      throw Error(Errc::malformed_annotation, "image " + src.id + " has non-positive size");
    }
    if (index_by_id.contains(src.id)) {
      throw Error(Errc::malformed_annotation, "duplicate image id " + src.id);
    }
    index_by_id[src.id] = out.images.size();
    out.images.push_back(std::move(src));
  }

  std::vector<bool> rejected(out.images.size(), false);
  if (auto it = doc.find("annotations"); it != doc.end()) {
    if (!it->is_array()) throw Error(Errc::malformed_annotation, "'annotations' must be an array");
    for (const auto& ann : *it) {
      const std::string image_id = id_string(require(ann, "image_id", "annotation"));
      auto found = index_by_id.find(image_id);
      if (found == index_by_id.end()) {
        throw Error(Errc::malformed_annotation, "annotation references unknown image " + image_id);
      }
      const json& bbox = require(ann, "bbox", "annotation");
      if (!bbox.is_array() || bbox.size() != 4) {
        throw Error(Errc::malformed_annotation, "bbox must be [x, y, w, h]");
      }
      std::string label = kBoatLabel;
      if (ann.contains("category_id")) {
        const std::string cat = id_string(ann["category_id"]);
        auto name = category_names.find(cat);
        label = name != category_names.end() ? name->second : cat;
      } else if (ann.contains("category")) {
        label = ann["category"].get<std::string>();
      }
      SourceImage& src = out.images[found->second];
      BoundingBox box = box_from_floating(bbox[0].get<double>(), bbox[1].get<double>(),
                                          bbox[2].get<double>(), bbox[3].get<double>(), label);
      if (!box.valid()) {
        out.warnings.push_back({src.id, "degenerate box dropped"});
        continue;
      }
      if (!box.in_image(src.width, src.height)) {
        rejected[found->second] = true;
        out.warnings.push_back({src.id, std::string(to_string(Errc::out_of_bounds_box)) +
                                            ": box exceeds image, image skipped"});
        continue;
      }
      src.boxes.push_back(std::move(box));
    }
  }

  std::vector<SourceImage> kept;
  kept.reserve(out.images.size());
  for (std::size_t i = 0; i < out.images.size(); ++i) {
    if (rejected[i]) {
      spdlog::warn("skipping image {}: out-of-bounds box", out.images[i].id);
      continue;
    }
    kept.push_back(std::move(out.images[i]));
  }
  out.images = std::move(kept);
  return out;
}

}  // namespace

void write_coco_annotations(const fs::path& annotation_file, std::span<const SourceImage> images,
                            const fs::path& image_root) {
  json doc;
  doc["images"] = json::array();
  doc["annotations"] = json::array();
  std::map<std::string, int> categories;
  int ann_id = 1;
  for (const auto& src : images) {
    doc["images"].push_back({{"id", src.id},
                             {"file_name", fs::relative(src.path, image_root).generic_string()},
                             {"width", src.width},
                             {"height", src.height}});
    for (const auto& b : src.boxes) {
      auto [it, inserted] =
          categories.emplace(b.class_label, static_cast<int>(categories.size()) + 1);
      doc["annotations"].push_back({{"id", ann_id++},
                                    {"image_id", src.id},
                                    {"bbox", {b.x, b.y, b.w, b.h}},
                                    {"category_id", it->second}});
    }
  }
  doc["categories"] = json::array();
  for (const auto& [name, id] : categories) doc["categories"].push_back({{"id", id}, {"name", name}});

  if (annotation_file.has_parent_path()) fs::create_directories(annotation_file.parent_path());
  std::ofstream out(annotation_file);
  if (!out) throw Error(Errc::io_failure, "cannot write " + annotation_file.string());
  out << doc.dump(2) << '\n';
}

cv::Mat load_source_pixels(const SourceImage& src) {
  cv::Mat img = read_image(src.path);
  if (img.cols != src.width || img.rows != src.height) {
    throw Error(Errc::dimension_mismatch,
                src.path.string() + " is " + std::to_string(img.cols) + "x" +
                    std::to_string(img.rows) + ", annotation says " + std::to_string(src.width) +
                    "x" + std::to_string(src.height));
  }
  return img;
}

}  // namespace seaforge
