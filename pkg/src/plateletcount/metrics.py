"""Evaluation: segmentation metrics, class weights, per-size spread and regression."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .core import N_CLASSES, BBox, Cluster, CountRecord, DimensionError, InputError, LabelMask, Method
from .synth import SceneTruth


def class_weights(frequencies: Sequence[float]) -> np.ndarray:
    """Normalized square root of inverse class frequency."""
    f = np.asarray(frequencies, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise InputError("frequencies must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(f)) or np.any(f <= 0):
        raise InputError("class frequencies must be positive")
    w = np.sqrt(1.0 / f)
    return w / w.sum()


@dataclass(frozen=True)
class MaskMetrics:
    per_class_f1: dict[int, float]
    macro_f1: float
    accuracy: float
    excluded: tuple[int, ...]


def confusion_matrix(pred: LabelMask, truth: LabelMask) -> np.ndarray:
    """``cm[t, p]`` counts pixels with true class ``t`` predicted as ``p``."""
    if pred.shape != truth.shape:
        raise DimensionError(f"prediction is {pred.shape} but truth is {truth.shape}")
    idx = truth.labels.astype(np.int64).ravel() * N_CLASSES + pred.labels.astype(np.int64).ravel()
    return np.bincount(idx, minlength=N_CLASSES * N_CLASSES).reshape(N_CLASSES, N_CLASSES)


def mask_metrics(pred: LabelMask, truth: LabelMask) -> MaskMetrics:
    """Pixel accuracy and per-class F1 = 2TP / (2TP + FP + FN).

    Classes absent from both masks have no F1 and are left out of the macro
    mean; they are listed in ``excluded``.
    """
    cm = confusion_matrix(pred, truth)
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    per_class = {k: float(2 * tp[k] / denom[k]) for k in range(N_CLASSES) if denom[k] > 0}
    excluded = tuple(k for k in range(N_CLASSES) if denom[k] == 0)
    return MaskMetrics(
        per_class_f1=per_class,
        macro_f1=float(np.mean(list(per_class.values()))),
        accuracy=float(tp.sum() / cm.sum()),
        excluded=excluded,
    )


@dataclass(frozen=True)
class GroupStats:
    """Spread of predicted counts for one true aggregate size.

    ``actual_size`` is ``None`` for the pooled row. ``cv`` is ``None`` when
    the mean is zero. Groups of one record report ``std = 0`` and are flagged.
    """

    actual_size: int | None
    n: int
    mean: float
    std: float
    cv: float | None
    se: float
    flagged: bool = False


def _stats(actual_size, values) -> GroupStats:
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if n > 1 else 0.0
    return GroupStats(
        actual_size=actual_size,
        n=n,
        mean=mean,
        std=std,
        cv=std / mean if mean > 0 else None,
        se=std / math.sqrt(n),
        flagged=n < 2,
    )


def group_stats(records: Iterable[CountRecord]) -> list[GroupStats]:
    """Per-size rows in ascending size order, followed by one pooled row."""
    records = list(records)
    if not records:
        raise InputError("group_stats needs at least one record")
    if any(r.actual is None for r in records):
        raise InputError("every record needs a ground-truth count")
    groups: dict[int, list[int]] = {}
    for r in records:
        groups.setdefault(r.actual, []).append(r.count)
    rows = [_stats(size, groups[size]) for size in sorted(groups)]
    rows.append(_stats(None, [r.count for r in records]))
    return rows


def mean_group_stats(rows: Sequence[GroupStats]) -> dict[str, float | None]:
    """Unweighted mean of per-size CV and SE, the alternative to the pooled row."""
    sized = [g for g in rows if g.actual_size is not None]
    cvs = [g.cv for g in sized if g.cv is not None]
    return {
        "cv": float(np.mean(cvs)) if cvs else None,
        "se": float(np.mean([g.se for g in sized])) if sized else None,
    }


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r2: float
    n: int


def linear_fit(pairs: Iterable[tuple[float, float]]) -> RegressionFit:
    """Least-squares line ``predicted = slope * actual + intercept``.

    ``r2`` is 1 - SSres/SStot; when every prediction is the same the fit is
    exact and ``r2`` is reported as 1.
    """
    arr = np.asarray(list(pairs), dtype=np.float64).reshape(-1, 2)
    if len(arr) < 2:
        raise InputError("linear_fit needs at least two pairs")
    x, y = arr[:, 0], arr[:, 1]
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise InputError("linear_fit is undefined when all actual values are equal")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RegressionFit(slope, intercept, min(max(r2, 0.0), 1.0), len(arr))


def _nearest(coords: np.ndarray, centers: np.ndarray) -> tuple[float, int]:
    d2 = ((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    flat = int(np.argmin(d2))
    return float(d2.flat[flat]), flat % len(centers)


def match_truth(
    records: Sequence[CountRecord],
    clusters: Sequence[Cluster],
    truth: SceneTruth,
    method: Method | str,
) -> tuple[list[CountRecord], list[CountRecord]]:
    """Attach ground truth to per-cluster records and roll them up per aggregate.

    Each true platelet center is credited to the cluster with the nearest
    pixel; that sets the per-cluster ``actual``. Each cluster is assigned to
    the aggregate owning the center nearest to any of its pixels, and the
    per-aggregate row sums the counts of its clusters (0 if none).

    Returns ``(cluster_records, aggregate_records)``. Aggregate rows reuse
    ``cluster_id`` for the aggregate id.
    """
    if len(records) != len(clusters):
        raise InputError("records and clusters must correspond one to one")
    centers = np.array([p for p, _ in truth.platelet_centers], dtype=np.int64).reshape(-1, 2)
    owners = [a for _, a in truth.platelet_centers]
    credited = [0] * len(clusters)
    by_aggregate: dict[int, list[int]] = {a: [] for a in truth.counts}

    if len(centers) and clusters:
        for p in centers:
            best = min(range(len(clusters)), key=lambda i: _nearest(clusters[i].coords, p[None, :])[0])
            credited[best] += 1
        for i, c in enumerate(clusters):
            by_aggregate[owners[_nearest(c.coords, centers)[1]]].append(i)

    cluster_rows = [replace(r, actual=credited[i]) for i, r in enumerate(records)]
    aggregate_rows = []
    for agg, n_true in truth.counts.items():
        idx = by_aggregate[agg]
        if idx:
            box = records[idx[0]].bbox
            for i in idx[1:]:
                box = box.union(records[i].bbox)
            pix = sum(records[i].pixel_count for i in idx)
            count = sum(records[i].count for i in idx)
        else:
            p = truth.centers_of(agg)[0]
            box, pix, count = BBox(p.row, p.col, p.row, p.col), 0, 0
        aggregate_rows.append(
            CountRecord(cluster_id=agg, pixel_count=pix, bbox=box, method=method, count=count, actual=n_true)
        )
    return cluster_rows, aggregate_rows
