"""slidepress: tile, snapshot, publish and catalog pyramidal slides."""

from .catalog import Catalog, SearchQuery, SpecimenRecord, link_to_catalog
from .deepzoom import DziPyramid, build_pyramid, plan_pyramid, validate_pyramid
from .errors import SlidepressError
from .pipeline import PipelineConfig, load_config, requeue_corrected, run_batch
from .slide import Region, SlideSource, StoredLevel, open_slide
from .snapshot import (
    SnapshotConfig,
    apply_watermark,
    compute_center_region,
    create_snapshot,
    review_override,
)
from .splitter import (
    Algorithm,
    EmptinessPolicy,
    SplitRequest,
    Verdict,
    classify_compression,
    classify_intensity,
    plan_grid,
    split_slide,
    tile_name,
)
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "Catalog",
    "DziPyramid",
    "EmptinessPolicy",
    "PipelineConfig",
    "Region",
    "SearchQuery",
    "SlideSource",
    "SlidepressError",
    "SnapshotConfig",
    "SpecimenRecord",
    "SplitRequest",
    "StoredLevel",
    "SyntheticSpec",
    "Verdict",
    "apply_watermark",
    "build_pyramid",
    "classify_compression",
    "classify_intensity",
    "compute_center_region",
    "create_snapshot",
    "generate_synthetic",
    "link_to_catalog",
    "load_config",
    "open_slide",
    "plan_grid",
    "plan_pyramid",
    "requeue_corrected",
    "review_override",
    "run_batch",
    "split_slide",
    "tile_name",
    "validate_pyramid",
]
