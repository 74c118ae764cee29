"""Grouping platelet pixels into aggregates.

With eps=1 and min_samples=1, DBSCAN on pixel coordinates links exactly
the 4-neighbors, so it reproduces 4-connected component labelling. Raising
eps to 1.5 also admits diagonal neighbors and merges more pixels.
"""

import numpy as np

from plateletcount import LabelMask
from plateletcount.clustering import cluster_platelet_aggregates, label_components4
from plateletcount.core import DbscanParams

mask = LabelMask(
    [
        [2, 2, 0, 0, 0, 0],
        [0, 2, 0, 0, 9, 9],
        [0, 0, 2, 0, 9, 0],
        [0, 0, 0, 0, 0, 0],
        [9, 0, 0, 0, 0, 2],
    ]
)

print("mask:")
print(mask.labels)

strict = cluster_platelet_aggregates(mask, (2, 9), DbscanParams(eps=1.0, min_samples=1))
print(f"\neps=1.0 finds {len(strict)} clusters")
print(strict.label_image(*mask.shape))

loose = cluster_platelet_aggregates(mask, (2, 9), DbscanParams(eps=1.5, min_samples=1))
print(f"\neps=1.5 (diagonals count) finds {len(loose)} clusters")
print(loose.label_image(*mask.shape))

cca = label_components4(mask, (2, 9))
print(f"\n4-connected components: {cca.count}")
same = np.array_equal(cca.labels, strict.label_image(*mask.shape))
print("matches eps=1.0 clustering:", same)
