"""Platelet counting: pixel area (PAM), peak cluster (PCM) and 4-connected components (CCA)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from .clustering import ComponentLabeling, cluster_platelet_aggregates, label_components4
from .core import (
    BBox,
    Cluster,
    CountParams,
    CountRecord,
    DimensionError,
    InputError,
    IntensityPlane,
    LabelMask,
    Method,
    PamParams,
    PcmParams,
    PixelCoord,
    validate_pair,
)

MINMAX = "minmax"
DEGENERATE_FLAT = "degenerate-flat"

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[PixelCoord, ...]
    crop_bbox: BBox
    normalization: str = MINMAX

    def __len__(self):
        return len(self.peaks)


def cluster_bbox(c: Cluster) -> BBox:
    """Square box around a cluster, side = the larger of its two extents.

    The short dimension is widened around the tight box; when the padding is
    odd the extra pixel goes to the high side. The result is not clamped.
    """
    rows, cols = c.coords[:, 0], c.coords[:, 1]
    r0, r1, c0, c1 = int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max())
    side = max(r1 - r0, c1 - c0) + 1
    dr = side - (r1 - r0 + 1)
    dc = side - (c1 - c0 + 1)
    return BBox(r0 - dr // 2, c0 - dc // 2, r1 + dr - dr // 2, c1 + dc - dc // 2)


def pad_and_clamp(b: BBox, margin: int, height: int, width: int) -> BBox:
    if margin < 0:
        raise InputError(f"margin must be non-negative, got {margin}")
    return BBox(b.row_min - margin, b.col_min - margin, b.row_max + margin, b.col_max + margin).clamp(
        height, width
    )


def crop_and_normalize(plane: IntensityPlane, b: BBox) -> tuple[np.ndarray, str]:
    """Min-max normalize the crop ``b`` of ``plane``; a flat crop becomes all zeros."""
    if b.row_min < 0 or b.col_min < 0 or b.row_max >= plane.height or b.col_max >= plane.width:
        raise InputError(f"crop {b} outside {plane.height}x{plane.width} plane")
    crop = plane.values[b.slices()]
    lo, hi = crop.min(), crop.max()
    if hi == lo:
        return np.zeros_like(crop), DEGENERATE_FLAT
    return (crop - lo) / (hi - lo), MINMAX


def local_maxima(grid: np.ndarray) -> np.ndarray:
    """Pixels not exceeded by any of their existing 8-neighbors."""
    padded = np.pad(grid, 1, mode="constant", constant_values=-np.inf)
    h, w = grid.shape
    is_max = np.ones(grid.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr or dc:
                is_max &= grid >= padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return is_max


def find_peaks(
    subgrid: np.ndarray,
    threshold: float = 0.9,
    restrict: Iterable[PixelCoord] | None = None,
    crop_bbox: BBox | None = None,
    normalization: str = MINMAX,
) -> PeakSet:
    """Thresholded local maxima of a normalized crop.

    8-connected groups of local-maximum pixels form one peak, reported at
    the group's row-major-first pixel. A peak is kept when its value is at
    least ``threshold`` and, if ``restrict`` is given, at least one pixel of
    its group is in ``restrict``.

    ``crop_bbox`` places the crop in the full image; peaks and ``restrict``
    use full-image coordinates. It defaults to the crop sitting at the origin.
    """
    grid = np.asarray(subgrid, dtype=np.float64)
    if crop_bbox is None:
        crop_bbox = BBox(0, 0, grid.shape[0] - 1, grid.shape[1] - 1)
    elif (crop_bbox.height, crop_bbox.width) != grid.shape:
        raise DimensionError(f"crop bbox {crop_bbox} does not match subgrid shape {grid.shape}")

    # adjacent local maxima are necessarily equal-valued, so plain
    # 8-connectivity over the maxima mask merges exactly the plateaus
    plateaus, n = ndimage.label(local_maxima(grid), structure=_EIGHT)
    if n == 0:
        return PeakSet((), crop_bbox, normalization)

    allowed = None
    if restrict is not None:
        allowed = np.zeros(grid.shape, dtype=bool)
        for r, c in restrict:
            rr, cc = r - crop_bbox.row_min, c - crop_bbox.col_min
            if 0 <= rr < grid.shape[0] and 0 <= cc < grid.shape[1]:
                allowed[rr, cc] = True

    flat = plateaus.ravel()
    ids, first = np.unique(flat, return_index=True)
    keep = ids > 0
    ids, first = ids[keep], first[keep]
    if allowed is not None:
        touches = np.zeros(n + 1, dtype=bool)
        touches[plateaus[allowed]] = True
    peaks = []
    for lab, idx in sorted(zip(ids.tolist(), first.tolist()), key=lambda t: t[1]):
        r, c = divmod(idx, grid.shape[1])
        if grid[r, c] < threshold:
            continue
        if allowed is not None and not touches[lab]:
            continue
        peaks.append(PixelCoord(r + crop_bbox.row_min, c + crop_bbox.col_min))
    return PeakSet(tuple(peaks), crop_bbox, normalization)


def _check_in_bounds(c: Cluster, height: int, width: int) -> None:
    rows, cols = c.coords[:, 0], c.coords[:, 1]
    if rows.min() < 0 or cols.min() < 0 or rows.max() >= height or cols.max() >= width:
        raise DimensionError(f"cluster {c.id} extends outside {height}x{width} image")


def record_bbox(c: Cluster, height: int, width: int) -> BBox:
    """The square cluster box clamped to the image, as stored in count records."""
    return cluster_bbox(c).clamp(height, width)


def pcm_peaks(c: Cluster, plane: IntensityPlane, params: PcmParams | None = None) -> PeakSet:
    params = params or PcmParams()
    _check_in_bounds(c, plane.height, plane.width)
    box = pad_and_clamp(cluster_bbox(c), params.margin, plane.height, plane.width)
    sub, tag = crop_and_normalize(plane, box)
    restrict = c.pixels if params.restrict_to_cluster else None
    return find_peaks(sub, params.peak_threshold, restrict, box, tag)


def pcm_count(c: Cluster, plane: IntensityPlane, params: PcmParams | None = None) -> CountRecord:
    """Count platelets in one aggregate as the number of bright local maxima (at least 1)."""
    peaks = pcm_peaks(c, plane, params)
    return CountRecord(
        cluster_id=c.id,
        pixel_count=c.size,
        bbox=record_bbox(c, plane.height, plane.width),
        method=Method.PCM,
        count=max(1, len(peaks)),
    )


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def pam_count(c: Cluster, params: PamParams | None = None, shape: tuple[int, int] | None = None) -> CountRecord:
    """Cluster area divided by the nominal platelet area, rounded half up, at least 1.

    ``shape`` clamps the recorded bbox to the image when given.
    """
    params = params or PamParams()
    box = cluster_bbox(c) if shape is None else record_bbox(c, *shape)
    return CountRecord(
        cluster_id=c.id,
        pixel_count=c.size,
        bbox=box,
        method=Method.PAM,
        count=max(1, round_half_up(c.size / params.platelet_area)),
    )


def cca_count(mask: LabelMask, foreground: Iterable[int] | int) -> tuple[int, ComponentLabeling]:
    labeling = label_components4(mask, foreground)
    return labeling.count, labeling


def image_clusters(mask: LabelMask, method: Method | str, params: CountParams | None = None) -> tuple[Cluster, ...]:
    """The units a method counts: DBSCAN clusters for PAM/PCM, 4-components for CCA."""
    params = params or CountParams()
    method = Method(method)
    if method is Method.CCA:
        return label_components4(mask, params.classes).clusters()
    return cluster_platelet_aggregates(mask, params.classes, params.dbscan).clusters


def count_clusters(
    clusters: Iterable[Cluster],
    mask: LabelMask,
    plane: IntensityPlane | None,
    method: Method | str,
    params: CountParams | None = None,
) -> list[CountRecord]:
    params = params or CountParams()
    method = Method(method)
    shape = mask.shape
    if method is Method.PCM:
        if plane is None:
            raise InputError("PCM requires an intensity plane")
        return [pcm_count(c, plane, params.pcm) for c in clusters]
    if method is Method.PAM:
        return [pam_count(c, params.pam, shape) for c in clusters]
    return [
        CountRecord(c.id, c.size, record_bbox(c, *shape), Method.CCA, 1)
        for c in clusters
    ]


def count_image(
    mask: LabelMask,
    plane: IntensityPlane | None,
    method: Method | str,
    params: CountParams | None = None,
) -> list[CountRecord]:
    """Count every aggregate (PAM/PCM) or component (CCA) of one image.

    Records are ordered by cluster or component id. ``plane`` may be
    ``None`` unless the method is PCM.
    """
    method = Method(method)
    if plane is not None:
        validate_pair(mask, plane)
    clusters = image_clusters(mask, method, params)
    return count_clusters(clusters, mask, plane, method, params)


def total_count(records: Iterable[CountRecord]) -> int:
    return sum(r.count for r in records)
