#include "seaforge/error.hpp"

namespace seaforge {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::missing_image: return "MissingImage";
    case Errc::malformed_annotation: return "MalformedAnnotation";
    case Errc::out_of_bounds_box: return "OutOfBoundsBox";
    case Errc::io_failure: return "IoFailure";
    case Errc::validation_error: return "ValidationError";
    case Errc::backend_unavailable: return "BackendUnavailable";
    case Errc::generation_failed: return "GenerationFailed";
    case Errc::timeout: return "Timeout";
    case Errc::model_missing: return "ModelMissing";
    case Errc::unreadable_image: return "UnreadableImage";
    case Errc::empty_class: return "EmptyClass";
    case Errc::diverged_training: return "DivergedTraining";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::no_valid_placement: return "NoValidPlacement";
    case Errc::empty_crop: return "EmptyCrop";
    case Errc::empty_manifest: return "EmptyManifest";
    case Errc::unknown_image_id: return "UnknownImageId";
    case Errc::unknown_session: return "UnknownSession";
    case Errc::duplicate_verdict: return "DuplicateVerdict";
    case Errc::unknown_item: return "UnknownItem";
    case Errc::no_sessions: return "NoSessions";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace seaforge
