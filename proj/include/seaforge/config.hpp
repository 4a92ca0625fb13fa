#pragma once

#include <filesystem>
#include <string>

#include "seaforge/pipeline.hpp"

namespace seaforge {

/// Parses a TOML pipeline configuration. Recognised tables and keys:
///
///   [backend]    name, endpoint, timeout_s, batch_size, mask_polarity, [backend.params]
///   [backend.mock] corrupt_objects, corrupt_every, roughness, native_width, native_height
///   [classifier] mode, model_path, input_resolution, seed
///   [checker]    mode, model_path, threshold, difference_scale
///   [pipeline]   images_per_source, seed, output_root, keep_discarded, workers, audit,
///                mask_dilation, annotations, image_root
///
/// Relative paths resolve against `base_dir`. Unknown keys raise Errc::config_error.
PipelineConfig parse_pipeline_config(const std::string& toml_text,
                                     const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& file);

}  // namespace seaforge
