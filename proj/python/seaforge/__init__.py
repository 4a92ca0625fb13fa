"""Sea-state synthetic data pipeline."""

from ._core import (
    BoundingBox,
    SeaforgeError,
    average_precision,
    box_from_floating,
    build_mask,
    classify_sea_state,
    cli,
    dataset_stats,
    filter_decision,
    good_image_rate,
    intersect_area,
    iou,
    passing_rate,
    quarter_shift_region,
    roughness_statistic,
    run_pipeline,
    synthesize_quarter_negative,
    valid_quarter_shifts,
    verdict_good,
    write_fixture_dataset,
)

__all__ = [
    "BoundingBox",
    "SeaforgeError",
    "average_precision",
    "box_from_floating",
    "build_mask",
    "classify_sea_state",
    "cli",
    "dataset_stats",
    "filter_decision",
    "good_image_rate",
    "intersect_area",
    "iou",
    "passing_rate",
    "quarter_shift_region",
    "roughness_statistic",
    "run_pipeline",
    "synthesize_quarter_negative",
    "valid_quarter_shifts",
    "verdict_good",
    "write_fixture_dataset",
]
