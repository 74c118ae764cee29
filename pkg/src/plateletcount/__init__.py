"""Platelet aggregate localization and counting from segmentation masks."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BBox,
    ClassId,
    Cluster,
    CountParams,
    CountRecord,
    DbscanParams,
    IntensityPlane,
    LabelMask,
    Method,
    PamParams,
    PcmParams,
    PixelCoord,
    mask_get,
    validate_pair,
)
from .clustering import cluster_platelet_aggregates, dbscan, extract_class_pixels, label_components4  # noqa: E402
from .counting import cca_count, count_image, pam_count, pcm_count  # noqa: E402
from .metrics import class_weights, group_stats, linear_fit, mask_metrics  # noqa: E402
from .synth import AggregateSpec, SceneSpec, SceneTruth, benchmark_suite, render_scene  # noqa: E402
