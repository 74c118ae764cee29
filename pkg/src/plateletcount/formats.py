"""File formats: binary PGM grids, ground-truth CSV and JSON count reports.

Masks are 8-bit P5 files whose samples are class ids. Intensity planes are
16-bit P5 files, most significant byte first, with value/65535 in ``[0, 1]``.
Every writer emits the canonical header ``P5\\n<w> <h>\\n<maxval>\\n`` and
writes through a temporary file renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .core import N_CLASSES, BBox, CountRecord, IntensityPlane, LabelMask, Method, PixelCoord, PlateletError
from .metrics import GroupStats, RegressionFit
from .synth import SceneTruth

MASK_MAXVAL = 255
PLANE_MAXVAL = 65535
TRUTH_HEADER = ["aggregate_id", "row", "col"]
RECORD_COLUMNS = ["cluster_id", "pixel_count", "row_min", "col_min", "row_max", "col_max", "method", "count", "actual"]


class FormatError(PlateletError, ValueError):
    """Malformed input file. ``offset`` is a byte offset, ``line`` a 1-based line number."""

    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        where = ""
        if offset is not None:
            where = f" (byte offset {offset})"
        elif line is not None:
            where = f" (line {line})"
        super().__init__(message + where)
        self.offset = offset
        self.line = line


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- PGM ---------------------------------------------------------------------


def _parse_pgm(data: bytes) -> tuple[int, int, int, int]:
    """Return ``(width, height, maxval, raster_offset)``."""
    if data[:2] != b"P5":
        raise FormatError("not a binary PGM: magic number must be P5", offset=0)
    pos = 2
    fields = []
    while len(fields) < 3:
        start = pos
        while pos < len(data) and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            else:
                pos += 1
        if pos == start:
            raise FormatError("expected whitespace in PGM header", offset=pos)
        tok_start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == tok_start:
            raise FormatError("expected a decimal number in PGM header", offset=tok_start)
        fields.append(int(data[tok_start:pos]))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("expected a single whitespace byte after maxval", offset=pos)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"PGM dimensions must be positive, got {width}x{height}", offset=3)
    if not 0 < maxval < 65536:
        raise FormatError(f"PGM maxval {maxval} out of range", offset=pos - 1)
    return width, height, maxval, pos + 1


def _pgm_header(width: int, height: int, maxval: int) -> bytes:
    return f"P5\n{width} {height}\n{maxval}\n".encode("ascii")


def _read_raster(data: bytes, expect_maxval: int, what: str) -> tuple[np.ndarray, int]:
    width, height, maxval, start = _parse_pgm(data)
    if maxval != expect_maxval:
        raise FormatError(f"{what} files must have maxval {expect_maxval}, got {maxval}", offset=start - 1)
    nbytes = 1 if maxval < 256 else 2
    need = width * height * nbytes
    have = len(data) - start
    if have < need:
        raise FormatError(f"truncated raster: need {need} bytes, have {have}", offset=len(data))
    if have > need:
        raise FormatError(f"{have - need} trailing bytes after raster", offset=start + need)
    dtype = np.uint8 if nbytes == 1 else np.dtype(">u2")
    return np.frombuffer(data, dtype=dtype, count=width * height, offset=start).reshape(height, width), start


def mask_to_bytes(mask: LabelMask) -> bytes:
    return _pgm_header(mask.width, mask.height, MASK_MAXVAL) + mask.labels.astype(np.uint8).tobytes()


def mask_from_bytes(data: bytes) -> LabelMask:
    raster, start = _read_raster(data, MASK_MAXVAL, "mask")
    bad = np.flatnonzero(raster >= N_CLASSES)
    if bad.size:
        i = int(bad[0])
        raise FormatError(f"invalid class value {int(raster.flat[i])}", offset=start + i)
    return LabelMask(raster)


def plane_to_bytes(plane: IntensityPlane) -> bytes:
    q = np.rint(plane.values * PLANE_MAXVAL).astype(">u2")
    return _pgm_header(plane.width, plane.height, PLANE_MAXVAL) + q.tobytes()


def plane_from_bytes(data: bytes) -> IntensityPlane:
    raster, _ = _read_raster(data, PLANE_MAXVAL, "intensity plane")
    return IntensityPlane(raster.astype(np.float64) / PLANE_MAXVAL)


def quantize_plane(plane: IntensityPlane) -> IntensityPlane:
    """The plane as it reads back after a 16-bit round trip."""
    return IntensityPlane(np.rint(plane.values * PLANE_MAXVAL) / PLANE_MAXVAL)


def write_mask(mask: LabelMask, path) -> None:
    atomic_write(path, mask_to_bytes(mask))


def read_mask(path) -> LabelMask:
    return mask_from_bytes(Path(path).read_bytes())


def write_plane(plane: IntensityPlane, path) -> None:
    atomic_write(path, plane_to_bytes(plane))


def read_plane(path) -> IntensityPlane:
    return plane_from_bytes(Path(path).read_bytes())


# -- truth CSV ---------------------------------------------------------------


def truth_to_text(truth: SceneTruth) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRUTH_HEADER)
    for p, agg in truth.platelet_centers:
        w.writerow([agg, p.row, p.col])
    return buf.getvalue()


def truth_from_text(text: str) -> SceneTruth:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != TRUTH_HEADER:
        raise FormatError(f"truth header must be {','.join(TRUTH_HEADER)}", line=1)
    centers = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"expected 3 fields, got {len(row)}", line=lineno)
        try:
            agg, r, c = (int(v) for v in row)
        except ValueError:
            raise FormatError(f"non-integer field in {row!r}", line=lineno) from None
        if min(agg, r, c) < 0:
            raise FormatError("fields must be non-negative", line=lineno)
        centers.append((PixelCoord(r, c), agg))
    return SceneTruth(tuple(centers))


def write_truth(truth: SceneTruth, path) -> None:
    atomic_write(path, truth_to_text(truth).encode("ascii"))


def read_truth(path) -> SceneTruth:
    return truth_from_text(Path(path).read_text(encoding="ascii"))


# -- reports -----------------------------------------------------------------


def _num(x):
    """Round floats to 6 significant digits; non-finite values become null."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, int, np.floating, np.integer)) or obj is None:
        return _num(obj)
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def record_to_dict(r: CountRecord) -> dict:
    return {
        "cluster_id": r.cluster_id,
        "pixel_count": r.pixel_count,
        "bbox": [r.bbox.row_min, r.bbox.col_min, r.bbox.row_max, r.bbox.col_max],
        "method": r.method.value,
        "count": r.count,
        "actual": r.actual,
    }


def record_from_dict(d: dict) -> CountRecord:
    return CountRecord(
        cluster_id=int(d["cluster_id"]),
        pixel_count=int(d["pixel_count"]),
        bbox=BBox(*map(int, d["bbox"])),
        method=Method(d["method"]),
        count=int(d["count"]),
        actual=None if d.get("actual") is None else int(d["actual"]),
    )


def group_to_dict(g: GroupStats) -> dict:
    return {
        "actual_size": "overall" if g.actual_size is None else g.actual_size,
        "n": g.n,
        "mean": g.mean,
        "std": g.std,
        "cv": g.cv,
        "se": g.se,
        "flagged": g.flagged,
    }


def fit_to_dict(f: RegressionFit | None) -> dict | None:
    if f is None:
        return None
    return {"slope": f.slope, "intercept": f.intercept, "r2": f.r2, "n": f.n}


@dataclass
class CountReport:
    """Everything one counting run produced, with the parameters that produced it.

    ``records`` hold one row per cluster (or component for CCA).
    ``aggregates`` is filled when ground truth was supplied and holds one
    row per true aggregate.
    """

    method: Method
    records: list[CountRecord]
    params: dict
    inputs: dict = field(default_factory=dict)
    aggregates: list[CountRecord] = field(default_factory=list)
    groups: list[GroupStats] = field(default_factory=list)
    fit: RegressionFit | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "toolkit": {"name": "plateletcount", "version": self.version},
            "method": Method(self.method).value,
            "params": self.params,
            "inputs": self.inputs,
            "total_count": sum(r.count for r in self.records),
            "records": [record_to_dict(r) for r in self.records],
            "aggregates": [record_to_dict(r) for r in self.aggregates],
            "groups": [group_to_dict(g) for g in self.groups],
            "fit": fit_to_dict(self.fit),
            "notes": {
                "groups": "predicted counts grouped by true aggregate size; sample std (n-1); "
                "cv is null when the group mean is 0",
            },
        }


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        b = r.bbox
        w.writerow(
            [r.cluster_id, r.pixel_count, b.row_min, b.col_min, b.row_max, b.col_max, r.method.value, r.count,
             "" if r.actual is None else r.actual]
        )
    return buf.getvalue()


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".csv")


def write_report(report: CountReport, path) -> None:
    """Write the JSON report and a ``.csv`` sidecar of its per-cluster records."""
    atomic_write(path, dumps_json(report.to_dict()).encode("utf-8"))
    atomic_write(sidecar_path(path), records_csv(report.records).encode("ascii"))


def read_report(path) -> dict:
    """Load a report written by :func:`write_report`; records come back as :class:`CountRecord`."""
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        d["records"] = [record_from_dict(r) for r in d["records"]]
        d["aggregates"] = [record_from_dict(r) for r in d.get("aggregates", [])]
        d["method"] = Method(d["method"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: not a count report ({exc})") from None
    return d
