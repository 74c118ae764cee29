"""Aggregate localization: class pixel extraction, DBSCAN and 4-connected labeling.

DBSCAN here works on integer pixel coordinates. Neighborhoods are found by
hashing every pixel and probing the fixed set of integer offsets that lie
within ``eps``, which keeps small-``eps`` runs linear in the number of points.

``label_components4`` is written independently of the DBSCAN path (plain
two-pass union-find) so that the two can check each other: at ``eps=1``,
``min_samples=1`` with the Euclidean metric the two partitions coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import Cluster, DbscanParams, InputError, LabelMask, PixelCoord

NOISE = -1


def _as_class_set(cls) -> frozenset[int]:
    if isinstance(cls, (int, np.integer)):
        return frozenset([int(cls)])
    return frozenset(int(c) for c in cls)


def _class_coords(mask: LabelMask, cls) -> np.ndarray:
    hit = np.isin(mask.labels, sorted(_as_class_set(cls)))
    return np.argwhere(hit).astype(np.int64)


def extract_class_pixels(mask: LabelMask, cls) -> list[PixelCoord]:
    """Coordinates of all pixels labeled ``cls``, in row-major order.

    ``cls`` may be a single class id or a collection of ids.
    """
    return [PixelCoord(r, c) for r, c in _class_coords(mask, cls).tolist()]


def _offsets_within(eps: float) -> np.ndarray:
    reach = int(np.floor(eps))
    d = np.arange(-reach, reach + 1)
    dr, dc = np.meshgrid(d, d, indexing="ij")
    keep = dr**2 + dc**2 <= eps * eps
    return np.column_stack([dr[keep], dc[keep]])


def _neighbor_pairs(pts: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs ``(i, j)`` with ``dist(i, j) <= eps``, self pairs included."""
    offsets = _offsets_within(eps)
    reach = int(np.floor(eps))
    lo = pts.min(axis=0) - reach
    span = int(pts[:, 1].max() - lo[1]) + reach + 1
    keys = (pts[:, 0] - lo[0]) * span + (pts[:, 1] - lo[1])
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    if np.any(sorted_keys[1:] == sorted_keys[:-1]):
        raise InputError("dbscan input contains duplicate points")

    src, dst = [], []
    for dr, dc in offsets:
        probe = keys + (dr * span + dc)
        pos = np.searchsorted(sorted_keys, probe)
        pos_c = np.minimum(pos, len(sorted_keys) - 1)
        found = sorted_keys[pos_c] == probe
        src.append(np.nonzero(found)[0])
        dst.append(order[pos_c[found]])
    return np.concatenate(src), np.concatenate(dst)


def dbscan(points, params: DbscanParams | None = None) -> np.ndarray:
    """Density-based clustering of integer pixel coordinates.

    A point is a core point when at least ``min_samples`` points (itself
    included) lie within ``eps``. Core points that are within ``eps`` of each
    other share a cluster. A non-core point within ``eps`` of some core point
    joins the cluster of the row-major-smallest such core point, which makes
    the partition independent of input order. Everything else is noise (-1).

    Parameters
    ----------
    points : array_like, shape (n, 2)
        Pairwise distinct integer ``(row, col)`` coordinates.
    params : DbscanParams, optional

    Returns
    -------
    labels : ndarray of int64, shape (n,)
        Cluster ids numbered ``0..k-1`` by first appearance in ``points``.
    """
    params = params or DbscanParams()
    pts = np.asarray(points)
    if pts.size == 0:
        return np.empty(0, dtype=np.int64)
    pts = pts.reshape(-1, 2)
    if pts.dtype.kind not in "iu":
        if not np.all(pts == np.round(pts)):
            raise InputError("dbscan expects integer pixel coordinates")
    pts = pts.astype(np.int64)
    n = len(pts)

    src, dst = _neighbor_pairs(pts, params.eps)
    n_neighbors = np.bincount(src, minlength=n)
    core = n_neighbors >= params.min_samples

    labels = np.full(n, NOISE, dtype=np.int64)
    both = core[src] & core[dst]
    core_idx = np.nonzero(core)[0]
    if core_idx.size:
        remap = np.full(n, -1, dtype=np.int64)
        remap[core_idx] = np.arange(core_idx.size)
        graph = coo_matrix(
            (np.ones(both.sum(), dtype=np.int8), (remap[src[both]], remap[dst[both]])),
            shape=(core_idx.size, core_idx.size),
        )
        _, comp = connected_components(graph, directed=False)
        labels[core_idx] = comp

        # border points: pick the row-major-smallest core neighbor
        border = ~core[src] & core[dst]
        if border.any():
            b_src, b_dst = src[border], dst[border]
            col0, ncols = pts[:, 1].min(), np.ptp(pts[:, 1]) + 1
            rank = pts[b_dst, 0] * ncols + (pts[b_dst, 1] - col0)
            by = np.lexsort((rank, b_src))
            b_src, b_dst = b_src[by], b_dst[by]
            first = np.ones(len(b_src), dtype=bool)
            first[1:] = b_src[1:] != b_src[:-1]
            labels[b_src[first]] = labels[b_dst[first]]

    return _renumber_first_seen(labels)


def _renumber_first_seen(labels: np.ndarray) -> np.ndarray:
    out = labels.copy()
    valid = labels >= 0
    if not valid.any():
        return out
    uniq, first_idx = np.unique(labels[valid], return_index=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first_idx, kind="stable")] = np.arange(len(uniq))
    out[valid] = rank[np.searchsorted(uniq, labels[valid])]
    return out


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[Cluster, ...]
    source_classes: tuple[int, ...]

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __getitem__(self, i):
        return self.clusters[i]

    def label_image(self, height: int, width: int) -> np.ndarray:
        """Grid with 0 for unclustered pixels and ``id + 1`` for cluster members."""
        out = np.zeros((height, width), dtype=np.int64)
        for c in self.clusters:
            out[c.coords[:, 0], c.coords[:, 1]] = c.id + 1
        return out


def clusters_from_labels(coords: np.ndarray, labels: np.ndarray) -> tuple[Cluster, ...]:
    """Group ``coords`` by non-negative label into :class:`Cluster` objects."""
    keep = labels >= 0
    coords, labels = coords[keep], labels[keep]
    if labels.size == 0:
        return ()
    order = np.argsort(labels, kind="stable")
    labels, coords = labels[order], coords[order]
    cuts = np.nonzero(np.diff(labels))[0] + 1
    return tuple(
        Cluster.from_array(int(lab[0]), pix)
        for lab, pix in zip(np.split(labels, cuts), np.split(coords, cuts))
    )


def cluster_platelet_aggregates(mask: LabelMask, cls, params: DbscanParams | None = None) -> ClusterSet:
    """Run DBSCAN over the pixels of ``cls`` and return the clusters.

    Noise pixels (possible only with ``min_samples > 1``) are dropped.
    Cluster ids follow row-major first encounter.
    """
    classes = _as_class_set(cls)
    coords = _class_coords(mask, classes)
    labels = dbscan(coords, params)
    return ClusterSet(clusters_from_labels(coords, labels), tuple(sorted(classes)))


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    labels: np.ndarray
    count: int

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def clusters(self) -> tuple[Cluster, ...]:
        """Components as clusters with ids ``label - 1``."""
        coords = np.argwhere(self.labels > 0)
        return clusters_from_labels(coords, self.labels[coords[:, 0], coords[:, 1]] - 1)


def _find(parent: list[int], x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def label_components4(mask: LabelMask, foreground: Iterable[int] | int) -> ComponentLabeling:
    """Two-pass 4-connected component labeling of the ``foreground`` classes.

    Labels are ``1..count`` in row-major first-encounter order; 0 is background.
    """
    fg = np.isin(mask.labels, sorted(_as_class_set(foreground)))
    h, w = fg.shape
    fg_rows: Sequence[Sequence[bool]] = fg.tolist()
    provisional = [[0] * w for _ in range(h)]
    parent = [0]

    for r in range(h):
        row = fg_rows[r]
        cur = provisional[r]
        above = provisional[r - 1] if r else None
        for c in range(w):
            if not row[c]:
                continue
            up = above[c] if above is not None else 0
            left = cur[c - 1] if c else 0
            if up and left:
                cur[c] = lab = min(up, left)
                if up != left:
                    a, b = _find(parent, up), _find(parent, left)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
            elif up or left:
                cur[c] = up or left
            else:
                lab = len(parent)
                parent.append(lab)
                cur[c] = lab

    relabel: dict[int, int] = {}
    for cur in provisional:
        for c in range(w):
            lab = cur[c]
            if lab:
                root = _find(parent, lab)
                k = relabel.get(root)
                if k is None:
                    k = relabel[root] = len(relabel) + 1
                cur[c] = k
    final = np.array(provisional, dtype=np.int64).reshape(h, w)
    final.flags.writeable = False
    return ComponentLabeling(final, len(relabel))
