"""Shared domain types for platelet localization and counting.

Grids are stored as read-only numpy arrays in row-major (C) order. All
containers are immutable once built.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

N_CLASSES = 10


class PlateletError(Exception):
    """Base class for all toolkit errors."""


class BoundsError(PlateletError, IndexError):
    pass


class DimensionError(PlateletError, ValueError):
    pass


class InputError(PlateletError, ValueError):
    pass


class ClassId(enum.IntEnum):
    BACKGROUND = 0
    WBC = 1
    PLATELET = 2
    RBC_EXTERIOR = 3
    RBC_INTERIOR = 4
    BEAD = 5
    ARTIFACT = 6
    DEBRIS = 7
    BUBBLE = 8
    PLATELET_AGGREGATE = 9


#: default foreground for platelet counting: singletons and aggregates jointly
PLATELET_CLASSES = (int(ClassId.PLATELET), int(ClassId.PLATELET_AGGREGATE))


class Method(str, enum.Enum):
    PAM = "pam"
    PCM = "pcm"
    CCA = "cca"


class PixelCoord(NamedTuple):
    row: int
    col: int


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True, order="C")
    arr.flags.writeable = False
    return arr


class LabelMask:
    """Per-pixel class labels, values in ``0..9``.

    Parameters
    ----------
    labels : array_like
        2-D integer grid. Values outside ``0..9`` are rejected, never wrapped.
    """

    __slots__ = ("_labels",)

    def __init__(self, labels):
        arr = np.asarray(labels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"label mask must be a non-empty 2-D grid, got shape {arr.shape}")
        if arr.dtype.kind not in "iub":
            if arr.dtype.kind == "f" and np.all(arr == np.round(arr)):
                arr = arr.astype(np.int64)
            else:
                raise InputError(f"label mask must hold integers, got dtype {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() >= N_CLASSES):
            bad = arr[(arr < 0) | (arr >= N_CLASSES)].flat[0]
            raise InputError(f"invalid class value {int(bad)}; expected 0..{N_CLASSES - 1}")
        self._labels = _frozen(arr.astype(np.uint8))

    @classmethod
    def from_flat(cls, height: int, width: int, labels: Iterable[int]) -> "LabelMask":
        flat = np.fromiter(labels, dtype=np.int64)
        if flat.size != height * width:
            raise DimensionError(f"expected {height * width} labels for {height}x{width}, got {flat.size}")
        return cls(flat.reshape(height, width))

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def shape(self) -> tuple[int, int]:
        return self._labels.shape

    @property
    def height(self) -> int:
        return self._labels.shape[0]

    @property
    def width(self) -> int:
        return self._labels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LabelMask):
            return NotImplemented
        return np.array_equal(self._labels, other._labels)

    __hash__ = None

    def __repr__(self):
        return f"LabelMask({self.height}x{self.width})"


class IntensityPlane:
    """Per-pixel brightness in ``[0, 1]``; one channel selected upstream."""

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"intensity plane must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise InputError("intensity values must lie in [0, 1]")
        self._values = _frozen(arr)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def shape(self) -> tuple[int, int]:
        return self._values.shape

    @property
    def height(self) -> int:
        return self._values.shape[0]

    @property
    def width(self) -> int:
        return self._values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, IntensityPlane):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    __hash__ = None

    def __repr__(self):
        return f"IntensityPlane({self.height}x{self.width})"


def mask_get(mask: LabelMask, p: PixelCoord) -> ClassId:
    row, col = p
    if not (0 <= row < mask.height and 0 <= col < mask.width):
        raise BoundsError(f"pixel ({row}, {col}) outside {mask.height}x{mask.width} mask")
    return ClassId(int(mask.labels.flat[row * mask.width + col]))


def validate_pair(mask: LabelMask, plane: IntensityPlane) -> None:
    """Raise :class:`DimensionError` unless mask and plane have equal shapes."""
    if mask.shape != plane.shape:
        raise DimensionError(
            f"mask is {mask.height}x{mask.width} but plane is {plane.height}x{plane.width}"
        )


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, inclusive on all four sides.

    Coordinates may be negative or exceed the grid before clamping.
    """

    row_min: int
    col_min: int
    row_max: int
    col_max: int

    def __post_init__(self):
        if self.row_min > self.row_max or self.col_min > self.col_max:
            raise InputError(f"degenerate bbox {self}")

    @property
    def height(self) -> int:
        return self.row_max - self.row_min + 1

    @property
    def width(self) -> int:
        return self.col_max - self.col_min + 1

    def clamp(self, height: int, width: int) -> "BBox":
        return BBox(
            max(self.row_min, 0),
            max(self.col_min, 0),
            min(self.row_max, height - 1),
            min(self.col_max, width - 1),
        )

    def contains(self, p: PixelCoord) -> bool:
        return self.row_min <= p[0] <= self.row_max and self.col_min <= p[1] <= self.col_max

    def slices(self) -> tuple[slice, slice]:
        return slice(self.row_min, self.row_max + 1), slice(self.col_min, self.col_max + 1)

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.row_min, other.row_min),
            min(self.col_min, other.col_min),
            max(self.row_max, other.row_max),
            max(self.col_max, other.col_max),
        )


@dataclass(frozen=True, eq=False)
class Cluster:
    """One platelet aggregate: an id and a non-empty set of pixels.

    Pixels are kept sorted in row-major order.
    """

    id: int
    pixels: tuple[PixelCoord, ...]

    def __post_init__(self):
        pix = tuple(sorted(PixelCoord(int(r), int(c)) for r, c in self.pixels))
        if not pix:
            raise InputError("cluster must contain at least one pixel")
        if any(a == b for a, b in zip(pix, pix[1:])):
            raise InputError(f"cluster {self.id} has duplicate pixels")
        object.__setattr__(self, "pixels", pix)

    @classmethod
    def from_array(cls, id: int, coords: np.ndarray) -> "Cluster":
        return cls(id, tuple(map(tuple, np.asarray(coords).tolist())))

    @cached_property
    def coords(self) -> np.ndarray:
        return _frozen(np.array(self.pixels, dtype=np.int64).reshape(-1, 2))

    @property
    def size(self) -> int:
        return len(self.pixels)

    def __len__(self):
        return len(self.pixels)

    def __eq__(self, other):
        if not isinstance(other, Cluster):
            return NotImplemented
        return self.id == other.id and self.pixels == other.pixels

    def __hash__(self):
        return hash((self.id, self.pixels))


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 1.0
    min_samples: int = 1
    metric: str = "euclidean"

    def __post_init__(self):
        if not self.eps > 0:
            raise InputError(f"eps must be positive, got {self.eps}")
        if int(self.min_samples) != self.min_samples or self.min_samples < 1:
            raise InputError(f"min_samples must be a positive integer, got {self.min_samples}")
        if self.metric != "euclidean":
            raise InputError(f"unsupported metric {self.metric!r}")


@dataclass(frozen=True)
class PcmParams:
    margin: int = 5
    peak_threshold: float = 0.9
    restrict_to_cluster: bool = True

    def __post_init__(self):
        if int(self.margin) != self.margin or self.margin < 0:
            raise InputError(f"margin must be a non-negative integer, got {self.margin}")
        if not 0.0 < self.peak_threshold <= 1.0:
            raise InputError(f"peak_threshold must lie in (0, 1], got {self.peak_threshold}")


@dataclass(frozen=True)
class PamParams:
    platelet_area: float = 3.0

    def __post_init__(self):
        if not self.platelet_area > 0:
            raise InputError(f"platelet_area must be positive, got {self.platelet_area}")


@dataclass(frozen=True)
class CountParams:
    """Every knob used by a counting run, with defaults mirroring the method description."""

    classes: tuple[int, ...] = PLATELET_CLASSES
    dbscan: DbscanParams = field(default_factory=DbscanParams)
    pcm: PcmParams = field(default_factory=PcmParams)
    pam: PamParams = field(default_factory=PamParams)

    def __post_init__(self):
        classes = tuple(sorted({int(ClassId(c)) for c in self.classes}))
        if not classes:
            raise InputError("at least one foreground class is required")
        object.__setattr__(self, "classes", classes)

    def as_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "eps": float(self.dbscan.eps),
            "min_samples": int(self.dbscan.min_samples),
            "metric": self.dbscan.metric,
            "margin": int(self.pcm.margin),
            "threshold": float(self.pcm.peak_threshold),
            "restrict_to_cluster": bool(self.pcm.restrict_to_cluster),
            "platelet_area": float(self.pam.platelet_area),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CountParams":
        return cls(
            classes=tuple(d["classes"]),
            dbscan=DbscanParams(d["eps"], d["min_samples"], d.get("metric", "euclidean")),
            pcm=PcmParams(d["margin"], d["threshold"], d["restrict_to_cluster"]),
            pam=PamParams(d["platelet_area"]),
        )


@dataclass(frozen=True)
class CountRecord:
    cluster_id: int
    pixel_count: int
    bbox: BBox
    method: Method
    count: int
    actual: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.count < 0 or self.pixel_count < 0:
            raise InputError("counts must be non-negative")
