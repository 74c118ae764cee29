"""Independent reference implementations used only by the tests."""

from collections import deque

import numpy as np


def brute_dbscan(points, eps, min_samples):
    """Textbook DBSCAN over a full distance matrix (Ester et al. style expansion).

    Border points go to whichever cluster reaches them first, so only core
    membership and noise are comparable with the library for min_samples > 1.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    neigh = [np.nonzero(d[i] <= eps)[0] for i in range(n)]
    core = np.array([len(nb) >= min_samples for nb in neigh], dtype=bool)
    labels = np.full(n, -1)
    cid = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cid
        queue = deque(neigh[i])
        while queue:
            j = queue.popleft()
            if labels[j] == -1:
                labels[j] = cid
                if core[j]:
                    queue.extend(neigh[j])
        cid += 1
    return labels, core


def flood_fill4(fg):
    """BFS 4-connected labeling; labels in row-major first-encounter order."""
    fg = np.asarray(fg, dtype=bool)
    h, w = fg.shape
    out = np.zeros((h, w), dtype=np.int64)
    k = 0
    for r in range(h):
        for c in range(w):
            if fg[r, c] and not out[r, c]:
                k += 1
                out[r, c] = k
                queue = deque([(r, c)])
                while queue:
                    y, x = queue.popleft()
                    for yy, xx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                        if 0 <= yy < h and 0 <= xx < w and fg[yy, xx] and not out[yy, xx]:
                            out[yy, xx] = k
                            queue.append((yy, xx))
    return out, k


def partition(labels):
    """Set-of-frozensets view of per-point labels; negative labels (noise) ignored."""
    groups = {}
    for i, lab in enumerate(np.asarray(labels).ravel().tolist()):
        if lab >= 0:
            groups.setdefault(lab, set()).add(i)
    return {frozenset(g) for g in groups.values()}


def grid_partition(label_grid):
    g = np.asarray(label_grid)
    groups = {}
    for (r, c), lab in np.ndenumerate(g):
        if lab > 0:
            groups.setdefault(int(lab), set()).add((r, c))
    return {frozenset(v) for v in groups.values()}


def random_mask(rng, shape, density, classes=(2,)):
    fg = rng.random(shape) < density
    labels = np.zeros(shape, dtype=np.uint8)
    labels[fg] = rng.choice(classes, size=int(fg.sum()))
    return labels
