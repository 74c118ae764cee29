"""Synthetic blood scenes with known platelet positions.

Each platelet is an isotropic Gaussian bump on a flat background, so its
central pixels are the brightest. Platelets of one aggregate sit on a line
through the aggregate center. Labels come from the noise-free signal only:
a pixel belongs to an aggregate when that aggregate's summed platelet
signal reaches half its amplitude.

Randomness comes from numpy's PCG64 generator seeded with ``SceneSpec.seed``.
Benchmark suites derive one seed per scene with
``numpy.random.SeedSequence([seed, difficulty_index, size, k])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import ClassId, InputError, IntensityPlane, LabelMask, PixelCoord, PlateletError

DIFFICULTIES = {
    "clean": {"spacing": 3.0, "noise_sigma": 0.01},
    "overlapping": {"spacing": 1.5, "noise_sigma": 0.03},
}

DISTRACTOR_SIGMA = 1.6
DISTRACTOR_AMPLITUDE = 0.5

_FOUR = ndimage.generate_binary_structure(2, 1)


class SceneError(PlateletError, ValueError):
    pass


@dataclass(frozen=True)
class AggregateSpec:
    center: PixelCoord
    n_platelets: int
    spacing: float = 3.0
    orientation: float = 0.0
    amplitude: float = 0.95
    blob_sigma: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "center", PixelCoord(*map(int, self.center)))
        if self.n_platelets < 1:
            raise SceneError("an aggregate needs at least one platelet")
        if not self.spacing > 0 or not self.blob_sigma > 0:
            raise SceneError("spacing and blob_sigma must be positive")
        if not 0.0 <= self.amplitude <= 1.0:
            raise SceneError("amplitude must lie in [0, 1]")

    def platelet_positions(self) -> np.ndarray:
        """Sub-pixel ``(row, col)`` centers, evenly spaced along the orientation."""
        t = (np.arange(self.n_platelets) - (self.n_platelets - 1) / 2.0) * self.spacing
        return np.column_stack(
            [
                self.center.row + t * math.sin(self.orientation),
                self.center.col + t * math.cos(self.orientation),
            ]
        )


@dataclass(frozen=True)
class SceneSpec:
    height: int
    width: int
    aggregates: tuple[AggregateSpec, ...] = ()
    background_level: float = 0.2
    noise_sigma: float = 0.01
    seed: int = 0
    distractors: int = 0

    def __post_init__(self):
        object.__setattr__(self, "aggregates", tuple(self.aggregates))
        if self.height < 1 or self.width < 1:
            raise SceneError("scene must be at least 1x1")
        if not 0.0 <= self.background_level <= 1.0:
            raise SceneError("background_level must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise SceneError("noise_sigma must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise SceneError("seed must be a 64-bit unsigned integer")
        if self.distractors < 0:
            raise SceneError("distractors must be non-negative")
        for a in self.aggregates:
            if not (0 <= a.center.row < self.height and 0 <= a.center.col < self.width):
                raise SceneError(f"aggregate center {tuple(a.center)} outside the scene")


@dataclass(frozen=True)
class SceneTruth:
    """Ground-truth platelet centers as ``(PixelCoord, aggregate_id)`` pairs."""

    platelet_centers: tuple[tuple[PixelCoord, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self,
            "platelet_centers",
            tuple((PixelCoord(int(p[0]), int(p[1])), int(a)) for p, a in self.platelet_centers),
        )

    @property
    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for _, agg in self.platelet_centers:
            out[agg] = out.get(agg, 0) + 1
        return dict(sorted(out.items()))

    def centers_of(self, aggregate_id: int) -> list[PixelCoord]:
        return [p for p, a in self.platelet_centers if a == aggregate_id]


@dataclass(frozen=True, eq=False)
class Scene:
    plane: IntensityPlane
    mask: LabelMask
    truth: SceneTruth
    spec: SceneSpec = field(repr=False)


def _gaussian(rr, cc, r, c, sigma):
    return np.exp(-((rr - r) ** 2 + (cc - c) ** 2) / (2.0 * sigma * sigma))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def render_scene(spec: SceneSpec) -> tuple[IntensityPlane, LabelMask, SceneTruth]:
    """Render a scene: intensity plane, label mask and ground truth.

    Raises
    ------
    SceneError
        If a platelet center falls outside the image, if the labeled
        footprints of two aggregates touch or overlap, or if distractors
        cannot be placed clear of the aggregates.
    """
    h, w = spec.height, spec.width
    rr, cc = np.mgrid[0:h, 0:w].astype(np.float64)
    rng = np.random.default_rng(spec.seed)

    signal = np.zeros((h, w))
    labels = np.zeros((h, w), dtype=np.uint8)
    occupied = np.zeros((h, w), dtype=bool)
    centers = []
    for agg_id, agg in enumerate(spec.aggregates):
        contribution = np.zeros((h, w))
        for r, c in agg.platelet_positions():
            ir, ic = _round_half_up(r), _round_half_up(c)
            if not (0 <= ir < h and 0 <= ic < w):
                raise SceneError(f"platelet of aggregate {agg_id} falls outside the scene")
            centers.append((PixelCoord(ir, ic), agg_id))
            contribution += agg.amplitude * _gaussian(rr, cc, r, c, agg.blob_sigma)
        footprint = contribution >= agg.amplitude / 2.0
        if np.any(ndimage.binary_dilation(footprint, _FOUR) & occupied):
            raise SceneError(f"aggregate {agg_id} touches or overlaps another aggregate")
        occupied |= footprint
        cls = ClassId.PLATELET if agg.n_platelets == 1 else ClassId.PLATELET_AGGREGATE
        labels[footprint] = cls
        signal += contribution

    if spec.distractors:
        keep_out = ndimage.binary_dilation(occupied, _FOUR, iterations=3)
        reach = int(math.ceil(DISTRACTOR_SIGMA * 2))
        for _ in range(spec.distractors):
            for _attempt in range(200):
                r, c = rng.uniform(0, h - 1), rng.uniform(0, w - 1)
                contribution = DISTRACTOR_AMPLITUDE * _gaussian(rr, cc, r, c, DISTRACTOR_SIGMA)
                footprint = contribution >= DISTRACTOR_AMPLITUDE / 2.0
                near = (np.abs(rr - r) <= reach) & (np.abs(cc - c) <= reach)
                if not np.any((footprint | near) & keep_out):
                    break
            else:
                raise SceneError("could not place distractor clear of the aggregates")
            labels[footprint & (labels == 0)] = ClassId.RBC_EXTERIOR
            signal += contribution

    values = spec.background_level + signal
    if spec.noise_sigma > 0:
        values = values + rng.normal(0.0, spec.noise_sigma, size=(h, w))
    values = np.clip(values, 0.0, 1.0)
    return IntensityPlane(values), LabelMask(labels), SceneTruth(tuple(centers))


@dataclass(frozen=True, eq=False)
class BenchmarkScene:
    size: int
    difficulty: str
    seed: int
    plane: IntensityPlane
    mask: LabelMask
    truth: SceneTruth
    spec: SceneSpec = field(repr=False)


def scene_seed(seed: int, difficulty: str, size: int, k: int) -> int:
    """Per-scene seed mixed from the suite seed and the scene's position."""
    diff_idx = list(DIFFICULTIES).index(difficulty)
    return int(np.random.SeedSequence([seed, diff_idx, size, k]).generate_state(1, np.uint64)[0])


def benchmark_suite(
    seed: int,
    sizes: Sequence[int],
    per_size: int,
    difficulty: str = "clean",
    height: int = 32,
    width: int = 32,
) -> list[BenchmarkScene]:
    """``per_size`` single-aggregate scenes for each aggregate size.

    The aggregate center is drawn near the middle of the frame and its
    orientation uniformly in ``[0, pi)``.
    """
    if not sizes:
        raise InputError("sizes must be non-empty")
    if difficulty not in DIFFICULTIES:
        raise InputError(f"unknown difficulty {difficulty!r}; expected one of {sorted(DIFFICULTIES)}")
    knobs = DIFFICULTIES[difficulty]
    suite = []
    for size in sizes:
        if size < 1:
            raise InputError("aggregate sizes must be positive")
        for k in range(per_size):
            s = scene_seed(seed, difficulty, size, k)
            layout = np.random.default_rng([s, 1])
            half = (size - 1) * knobs["spacing"] / 2.0 + 3
            lo_r, hi_r = math.ceil(half), height - 1 - math.ceil(half)
            lo_c, hi_c = math.ceil(half), width - 1 - math.ceil(half)
            if lo_r > hi_r or lo_c > hi_c:
                raise InputError(f"a {height}x{width} frame is too small for aggregates of size {size}")
            center = PixelCoord(
                int(layout.integers(lo_r, hi_r, endpoint=True)),
                int(layout.integers(lo_c, hi_c, endpoint=True)),
            )
            agg = AggregateSpec(
                center=center,
                n_platelets=size,
                spacing=knobs["spacing"],
                orientation=float(layout.uniform(0.0, math.pi)),
            )
            spec = SceneSpec(height, width, (agg,), noise_sigma=knobs["noise_sigma"], seed=s)
            plane, mask, truth = render_scene(spec)
            suite.append(BenchmarkScene(size, difficulty, s, plane, mask, truth, spec))
    return suite
