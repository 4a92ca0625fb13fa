#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seaforge {

enum class Errc {
  missing_image,
  malformed_annotation,
  out_of_bounds_box,
  io_failure,
  validation_error,
  backend_unavailable,
  generation_failed,
  timeout,
  model_missing,
  unreadable_image,
  empty_class,
  diverged_training,
  dimension_mismatch,
  no_valid_placement,
  empty_crop,
  empty_manifest,
  unknown_image_id,
  unknown_session,
  duplicate_verdict,
  unknown_item,
  no_sessions,
  config_error,
};

std::string_view to_string(Errc code);

// All library failures surface as this type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace seaforge
