"""Tree height and biovolume from crown/shadow masks of UAV orthophotos."""

from .solar_geometry import (
    GeoLocation,
    UtcInstant,
    SolarPosition,
    julian_day,
    solar_position,
    solar_noon_utc,
    shadow_direction_vector,
)
from .mask_raster import (
    LabelClass,
    GeoTransform,
    LabelRaster,
    RgbRaster,
    InstanceMask,
    load_label_raster,
    save_label_raster,
    load_rgb_raster,
    save_rgb_raster,
    save_binary_mask,
    connected_components,
    instances_from_raster,
    crown_area_m2,
    hsv_value_channel,
    shadow_candidates,
)
from .tree_metrics import (
    HeightMode,
    OffsetTarget,
    HeightModel,
    PairingParams,
    TreePairing,
    TreeRecord,
    SceneMeasurement,
    pair_crowns_shadows,
    shadow_length_m,
    tree_height_m,
    biovolume_m3,
    measure_scene,
    measure_scene_detailed,
    records_to_frame,
    records_to_csv,
    records_to_json,
    inventory_summary,
)
from .evaluation import (
    ConfusionCounts,
    ClassMetrics,
    MacroMetrics,
    SegmentationReport,
    DetectionMetrics,
    precision,
    recall,
    f1,
    iou,
    confusion,
    segmentation_report,
    pooled_segmentation_report,
    format_report_table,
    instance_detection_metrics,
)
from .synth_oracle import (
    TreeSpec,
    SceneSpec,
    SplitResult,
    shadow_distance_m,
    render_scene,
    random_scene,
    ground_truth_frame,
    monte_carlo_split,
)
from .config import AcquisitionMetadata, RunConfig, load_sidecar
from .exceptions import (
    CanopyVolError,
    InputValidationError,
    ConfigError,
    SidecarError,
    DimensionMismatchError,
    SceneError,
    GeometryError,
    RasterFormatError,
    RasterIOError,
    PlacementError,
)

__all__ = [
    # Solar geometry
    "GeoLocation",
    "UtcInstant",
    "SolarPosition",
    "julian_day",
    "solar_position",
    "solar_noon_utc",
    "shadow_direction_vector",
    # Rasters
    "LabelClass",
    "GeoTransform",
    "LabelRaster",
    "RgbRaster",
    "InstanceMask",
    "load_label_raster",
    "save_label_raster",
    "load_rgb_raster",
    "save_rgb_raster",
    "save_binary_mask",
    "connected_components",
    "instances_from_raster",
    "crown_area_m2",
    "hsv_value_channel",
    "shadow_candidates",
    # Tree metrics
    "HeightMode",
    "OffsetTarget",
    "HeightModel",
    "PairingParams",
    "TreePairing",
    "TreeRecord",
    "SceneMeasurement",
    "pair_crowns_shadows",
    "shadow_length_m",
    "tree_height_m",
    "biovolume_m3",
    "measure_scene",
    "measure_scene_detailed",
    "records_to_frame",
    "records_to_csv",
    "records_to_json",
    "inventory_summary",
    # Evaluation
    "ConfusionCounts",
    "ClassMetrics",
    "MacroMetrics",
    "SegmentationReport",
    "DetectionMetrics",
    "precision",
    "recall",
    "f1",
    "iou",
    "confusion",
    "segmentation_report",
    "pooled_segmentation_report",
    "format_report_table",
    "instance_detection_metrics",
    # Synthetic scenes and splits
    "TreeSpec",
    "SceneSpec",
    "SplitResult",
    "shadow_distance_m",
    "render_scene",
    "random_scene",
    "ground_truth_frame",
    "monte_carlo_split",
    # Configuration
    "AcquisitionMetadata",
    "RunConfig",
    "load_sidecar",
    # Exceptions
    "CanopyVolError",
    "InputValidationError",
    "ConfigError",
    "SidecarError",
    "DimensionMismatchError",
    "SceneError",
    "GeometryError",
    "RasterFormatError",
    "RasterIOError",
    "PlacementError",
]
