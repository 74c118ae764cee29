import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from oracles import brute_dbscan, flood_fill4, grid_partition, partition, random_mask
from plateletcount.clustering import (
    cluster_platelet_aggregates,
    dbscan,
    extract_class_pixels,
    label_components4,
)
from plateletcount.core import DbscanParams, InputError, LabelMask


def test_extract_class_pixels():
    m = LabelMask.from_flat(2, 2, [2, 0, 0, 2])
    assert extract_class_pixels(m, 2) == [(0, 0), (1, 1)]
    assert extract_class_pixels(m, 5) == []
    full = LabelMask(np.full((3, 3), 9))
    assert extract_class_pixels(full, 9) == [(r, c) for r in range(3) for c in range(3)]


def test_extract_class_pixels_multiple_classes():
    m = LabelMask([[2, 9, 0]])
    assert extract_class_pixels(m, {2, 9}) == [(0, 0), (0, 1)]


def test_dbscan_examples():
    pts = [(0, 0), (0, 1), (5, 5)]
    assert dbscan(pts, DbscanParams(1, 1)).tolist() == [0, 0, 1]
    assert brute_dbscan(pts, 1, 1)[0].tolist() == [0, 0, 1]
    assert dbscan([], DbscanParams(1, 1)).tolist() == []
    # diagonal distance sqrt(2) exceeds eps = 1
    assert dbscan([(0, 0), (1, 1)], DbscanParams(1, 1)).tolist() == [0, 1]
    assert dbscan([(0, 0), (1, 1)], DbscanParams(1.5, 1)).tolist() == [0, 0]


def test_dbscan_rejects_duplicates():
    with pytest.raises(InputError):
        dbscan([(0, 0), (0, 0)])


def test_dbscan_noise_with_min_samples():
    pts = [(0, 0), (0, 1), (0, 2), (9, 9)]
    assert dbscan(pts, DbscanParams(1, 2)).tolist() == [0, 0, 0, -1]


def test_dbscan_border_point_goes_to_smallest_core_neighbor():
    # (1, 3) borders core points (1, 2) and (1, 4) of two different clusters
    left = [(1, 0), (1, 1), (1, 2), (0, 1), (2, 1), (0, 2)]
    right = [(1, 4), (1, 5), (1, 6), (0, 5), (2, 5), (0, 4)]
    pts = right + left + [(1, 3)]
    labels = dbscan(pts, DbscanParams(1, 4))
    brute, core = brute_dbscan(pts, 1, 4)
    assert not core[-1] and core[pts.index((1, 2))] and core[pts.index((1, 4))]
    assert labels[-1] == labels[pts.index((1, 2))]
    assert labels[pts.index((1, 2))] != labels[pts.index((1, 4))]
    assert partition(labels[core]) == partition(brute[core])


points_strategy = st.lists(
    st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=0, max_size=60, unique=True
)


@settings(max_examples=150, deadline=None)
@given(points_strategy, st.sampled_from([1.0, 1.5, 2.0, 2.9, 3.0]), st.integers(1, 5))
def test_dbscan_matches_brute_force(points, eps, min_samples):
    labels = dbscan(points, DbscanParams(eps, min_samples))
    brute, core = brute_dbscan(points, eps, min_samples)
    assert np.array_equal(labels < 0, brute < 0)
    assert partition(labels[core]) == partition(brute[core])
    pts = np.asarray(points).reshape(-1, 2)
    for i in np.nonzero(~core & (labels >= 0))[0]:
        near_core = core & (np.hypot(*(pts - pts[i]).T) <= eps)
        assert labels[i] in set(labels[near_core])


@settings(max_examples=100, deadline=None)
@given(points_strategy, st.randoms(use_true_random=False), st.sampled_from([1.0, 1.5, 2.5]), st.integers(1, 4))
def test_dbscan_permutation_invariant(points, random, eps, min_samples):
    perm = list(range(len(points)))
    random.shuffle(perm)
    a = dbscan(points, DbscanParams(eps, min_samples))
    b = dbscan([points[i] for i in perm], DbscanParams(eps, min_samples))
    unpermuted = np.empty_like(b)
    unpermuted[perm] = b
    assert partition(a) == partition(unpermuted)
    assert np.array_equal(a < 0, unpermuted < 0)


@settings(max_examples=100, deadline=None)
@given(points_strategy, st.lists(st.floats(0.5, 6.0), min_size=2, max_size=5))
def test_dbscan_monotone_in_eps(points, eps_values):
    counts = [len(set(dbscan(points, DbscanParams(e, 1)).tolist())) for e in sorted(eps_values)]
    assert counts == sorted(counts, reverse=True)


@settings(max_examples=100, deadline=None)
@given(points_strategy)
def test_min_samples_one_has_no_noise(points):
    labels = dbscan(points, DbscanParams(1.0, 1))
    assert (labels >= 0).all()
    if len(points):
        assert sorted(set(labels.tolist())) == list(range(labels.max() + 1))


def test_label_components4_examples():
    assert label_components4(LabelMask(np.zeros((4, 4), int)), {2}).count == 0
    cross = np.zeros((3, 3), int)
    cross[1, :] = 2
    cross[:, 1] = 2
    assert label_components4(LabelMask(cross), {2}).count == 1
    diag = np.zeros((2, 2), int)
    diag[0, 0] = diag[1, 1] = 2
    lab = label_components4(LabelMask(diag), {2})
    assert lab.count == 2
    assert lab.labels.tolist() == [[1, 0], [0, 2]]


def test_label_components4_u_shape_merges():
    # the two arms get different provisional labels and meet at the bottom
    m = np.array([[2, 0, 2], [2, 0, 2], [2, 2, 2]])
    lab = label_components4(LabelMask(m), 2)
    assert lab.count == 1
    assert set(lab.labels[m == 2].tolist()) == {1}


@pytest.mark.parametrize("density", [0.05, 0.3, 0.6, 0.9])
def test_label_components4_matches_flood_fill_and_scipy(rng, density):
    for _ in range(20):
        m = random_mask(rng, (17, 23), density, classes=(2, 9))
        lab = label_components4(LabelMask(m), {2, 9})
        ref, k = flood_fill4(m > 0)
        assert lab.count == k
        assert np.array_equal(lab.labels, ref)
        sp, k_sp = ndimage.label(m > 0)
        assert k_sp == k
        assert lab.labels.max() == lab.count


def test_cluster_platelet_aggregates_examples():
    m = np.zeros((6, 6), int)
    m[0, 0:3] = 9
    m[3:5, 4] = 9
    m[4, 3] = 9
    cs = cluster_platelet_aggregates(LabelMask(m), 9, DbscanParams(1, 1))
    assert [c.size for c in cs] == [3, 3]
    assert [c.id for c in cs] == [0, 1]
    assert grid_partition(cs.label_image(6, 6)) == grid_partition(label_components4(LabelMask(m), 9).labels)

    assert len(cluster_platelet_aggregates(LabelMask(np.zeros((4, 4), int)), 2)) == 0

    single = np.zeros((5, 5), int)
    single[2, 2] = 2
    cs = cluster_platelet_aggregates(LabelMask(single), 2)
    assert len(cs) == 1 and cs[0].size == 1


def test_cluster_set_partitions_class_pixels(rng):
    m = random_mask(rng, (20, 20), 0.4, classes=(2, 3, 9))
    cs = cluster_platelet_aggregates(LabelMask(m), {2, 9})
    seen = [p for c in cs for p in c.pixels]
    assert len(seen) == len(set(seen))
    assert set(seen) == set(extract_class_pixels(LabelMask(m), {2, 9}))


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 24),
    st.integers(1, 24),
    st.floats(0.0, 1.0),
    st.integers(0, 2**32 - 1),
)
def test_dbscan_equals_components4(h, w, density, seed):
    m = LabelMask(random_mask(np.random.default_rng(seed), (h, w), density))
    cs = cluster_platelet_aggregates(m, 2, DbscanParams(1.0, 1))
    lab = label_components4(m, 2)
    # both number clusters by row-major first encounter, so the grids match exactly
    assert np.array_equal(cs.label_image(h, w), lab.labels)
