"""Point-cloud corruption synthesis, denoising, and robustness metrics.

The package corrupts KITTI-format LiDAR frames with 25 physically
motivated corruption kinds at six severity levels (0 is the identity),
filters scans with KNN outlier removal, and scores externally produced
detection files: accuracy deltas against clean results plus a four-way
detection bug partition.
"""

from .catalog import (
    ALL_KINDS,
    LABEL_MUTATING,
    OBJECT_KINDS,
    SCENE_KINDS,
    WEATHER_KINDS,
    apply_corruption,
    kind_module,
)
from .core import (
    Box3D,
    Point,
    PointCloud,
    RandomStream,
    SEVERITY_LEVELS,
    frame_seed,
)
from .denoise import DenoiseResult, knn_outlier_removal
from .knn import KnnIndex
from .metrics import (
    BugRates,
    MatchResult,
    average_precision,
    bug_rate,
    classify_detections,
    corruption_error,
    corruption_risk,
    iou3d,
    mean_corruption_error,
    mean_corruption_risk,
    overall_accuracy,
)
from .objects import CorruptedFrame, CorruptionSpec, corrupt_objects, extract_objects
from .pipeline import (
    DatasetManifest,
    run_corrupt,
    run_denoise,
    run_evaluate,
    run_report,
)
from .weather import WeatherParams, simulate_weather

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS",
    "Box3D",
    "BugRates",
    "CorruptedFrame",
    "CorruptionSpec",
    "DatasetManifest",
    "DenoiseResult",
    "KnnIndex",
    "LABEL_MUTATING",
    "MatchResult",
    "OBJECT_KINDS",
    "Point",
    "PointCloud",
    "RandomStream",
    "SCENE_KINDS",
    "SEVERITY_LEVELS",
    "WEATHER_KINDS",
    "WeatherParams",
    "apply_corruption",
    "average_precision",
    "bug_rate",
    "classify_detections",
    "corrupt_objects",
    "corruption_error",
    "corruption_risk",
    "extract_objects",
    "frame_seed",
    "iou3d",
    "kind_module",
    "knn_outlier_removal",
    "mean_corruption_error",
    "mean_corruption_risk",
    "overall_accuracy",
    "run_corrupt",
    "run_denoise",
    "run_evaluate",
    "run_report",
    "simulate_weather",
]
