import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from plateletcount.core import BBox, Cluster, CountRecord, InputError, LabelMask, Method
from plateletcount.metrics import (
    class_weights,
    group_stats,
    linear_fit,
    mask_metrics,
    match_truth,
    mean_group_stats,
)
from plateletcount.synth import SceneTruth


def rec(count, actual=None, cid=0):
    return CountRecord(cid, 3, BBox(0, 0, 0, 0), Method.PCM, count, actual)


def test_class_weights_examples():
    np.testing.assert_allclose(class_weights([0.5, 0.5]), [0.5, 0.5])
    # sqrt(4) = 2 and sqrt(4/3) = 1.1547, normalized by 3.1547
    np.testing.assert_allclose(class_weights([0.25, 0.75]), [0.6340, 0.3660], atol=1e-4)
    np.testing.assert_allclose(class_weights([1.0]), [1.0])


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-0.1, 1.1], [], [np.nan]])
def test_class_weights_rejects(bad):
    with pytest.raises(InputError):
        class_weights(bad)


@settings(max_examples=200)
@given(st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=12))
def test_class_weights_properties(raw):
    f = np.array(raw) / np.sum(raw)
    w = class_weights(f)
    assert abs(w.sum() - 1.0) < 1e-12
    for i in range(len(f)):
        for j in range(len(f)):
            if f[i] < f[j] * (1 - 1e-9):
                assert w[i] > w[j]
            elif f[i] < f[j]:
                # ulp-level gaps may round to equal weights
                assert w[i] >= w[j]


def test_mask_metrics_identity():
    m = LabelMask([[0, 2, 9], [3, 3, 0]])
    mm = mask_metrics(m, m)
    assert mm.accuracy == 1.0
    assert mm.per_class_f1 == {0: 1.0, 2: 1.0, 3: 1.0, 9: 1.0}
    assert mm.macro_f1 == 1.0
    assert mm.excluded == (1, 4, 5, 6, 7, 8)


def test_mask_metrics_all_background_prediction():
    truth = LabelMask([[2, 2, 0, 0]])
    mm = mask_metrics(LabelMask([[0, 0, 0, 0]]), truth)
    assert mm.per_class_f1[2] == 0.0
    assert mm.accuracy == 0.5


def test_mask_metrics_hand_example():
    mm = mask_metrics(LabelMask.from_flat(2, 2, [2, 2, 0, 0]), LabelMask.from_flat(2, 2, [2, 0, 0, 0]))
    assert abs(mm.per_class_f1[2] - 2 / 3) < 1e-12
    assert abs(mm.accuracy - 3 / 4) < 1e-12
    # background: TP 2, FN 1 -> 4/5
    assert abs(mm.per_class_f1[0] - 0.8) < 1e-12
    assert abs(mm.macro_f1 - (2 / 3 + 0.8) / 2) < 1e-12


def test_mask_metrics_dimension_mismatch():
    with pytest.raises(ValueError):
        mask_metrics(LabelMask([[0]]), LabelMask([[0, 0]]))


masks = st.integers(1, 6).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 9), min_size=n, max_size=n),
        st.lists(st.integers(0, 9), min_size=n, max_size=n),
    )
)


@given(masks)
def test_mask_metrics_accuracy_symmetric_and_bounded(pair):
    a, b = LabelMask([pair[0]]), LabelMask([pair[1]])
    m1, m2 = mask_metrics(a, b), mask_metrics(b, a)
    assert m1.accuracy == m2.accuracy
    assert 0 <= m1.accuracy <= 1
    assert all(0 <= f <= 1 for f in m1.per_class_f1.values())
    # F1 is symmetric in pred/truth as well
    assert m1.per_class_f1 == pytest.approx(m2.per_class_f1)


def test_mask_metrics_disjoint_labels():
    mm = mask_metrics(LabelMask([[2, 2]]), LabelMask([[9, 9]]))
    assert mm.per_class_f1 == {2: 0.0, 9: 0.0}
    assert mm.accuracy == 0.0


def test_group_stats_examples():
    rows = group_stats([rec(1, 1), rec(1, 1), rec(1, 1)])
    assert rows[0].cv == 0.0 and rows[0].se == 0.0
    rows = group_stats([rec(1, 2), rec(3, 2)])
    g = rows[0]
    assert g.actual_size == 2 and g.mean == 2.0
    assert g.std == pytest.approx(math.sqrt(2))
    assert g.cv == pytest.approx(0.70710678, abs=1e-6)
    assert g.se == pytest.approx(1.0)
    single = group_stats([rec(4, 4)])
    assert single[0].std == 0.0 and single[0].flagged


def test_group_stats_order_and_pooled_row():
    rows = group_stats([rec(3, 3), rec(1, 1), rec(2, 2), rec(2, 1)])
    assert [g.actual_size for g in rows] == [1, 2, 3, None]
    pooled = rows[-1]
    assert pooled.n == 4
    assert pooled.mean == 2.0
    assert pooled.std == pytest.approx(np.std([3, 1, 2, 2], ddof=1))


def test_group_stats_zero_mean_has_no_cv():
    rows = group_stats([rec(0, 1), rec(0, 1)])
    assert rows[0].cv is None


def test_group_stats_errors():
    with pytest.raises(InputError):
        group_stats([])
    with pytest.raises(InputError):
        group_stats([rec(1)])


@given(
    st.lists(st.tuples(st.integers(1, 6), st.integers(1, 30)), min_size=2, max_size=40),
    st.integers(2, 5),
)
def test_group_stats_scale_equivariance(pairs, c):
    base = group_stats([rec(p, a) for a, p in pairs])
    scaled = group_stats([rec(p * c, a) for a, p in pairs])
    for g, s in zip(base, scaled):
        assert s.mean == pytest.approx(c * g.mean)
        assert s.std == pytest.approx(c * g.std)
        assert s.se == pytest.approx(c * g.se)
        assert s.cv == pytest.approx(g.cv)


def test_mean_group_stats():
    rows = group_stats([rec(1, 2), rec(3, 2), rec(1, 1), rec(1, 1)])
    m = mean_group_stats(rows)
    assert m["cv"] == pytest.approx((0.0 + math.sqrt(2) / 2) / 2)
    assert m["se"] == pytest.approx(0.5)


def test_linear_fit_examples():
    f = linear_fit([(k, k) for k in range(1, 6)])
    assert (f.slope, f.intercept, f.r2, f.n) == pytest.approx((1, 0, 1, 5))
    f = linear_fit([(1, 2), (2, 4), (3, 6)])
    assert (f.slope, f.intercept, f.r2) == pytest.approx((2, 0, 1))
    f = linear_fit([(1, 1), (2, 1), (3, 3)])
    assert f.slope == pytest.approx(1.0, abs=1e-12)
    assert f.intercept == pytest.approx(-1 / 3, abs=1e-12)
    assert f.r2 == pytest.approx(0.75, abs=1e-12)


def test_linear_fit_errors():
    with pytest.raises(InputError):
        linear_fit([(1, 1)])
    with pytest.raises(InputError):
        linear_fit([(2, 1), (2, 3)])


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(1, 10), st.integers(0, 40)), min_size=2, max_size=50))
def test_linear_fit_against_polyfit_and_orthogonality(pairs):
    xs = [p[0] for p in pairs]
    assume(len(set(xs)) > 1)
    f = linear_fit(pairs)
    x, y = np.array(pairs, dtype=float).T
    slope, intercept = np.polyfit(x, y, 1)
    assert f.slope == pytest.approx(slope, rel=1e-9, abs=1e-9)
    assert f.intercept == pytest.approx(intercept, rel=1e-9, abs=1e-9)
    resid = y - (f.slope * x + f.intercept)
    scale = np.abs(y).sum() + 1
    assert abs(resid.sum()) <= 1e-9 * scale
    assert abs((resid * x).sum()) <= 1e-9 * scale * x.max()
    assert 0 <= f.r2 <= 1


def test_match_truth_rolls_up_split_aggregate():
    truth = SceneTruth((((2, 2), 0), ((2, 5), 0), ((9, 9), 1)))
    clusters = [Cluster(0, [(2, 2)]), Cluster(1, [(2, 5), (2, 6)]), Cluster(2, [(9, 9), (9, 10)])]
    records = [rec(1, cid=0), rec(1, cid=1), rec(2, cid=2)]
    per_cluster, per_agg = match_truth(records, clusters, truth, Method.PCM)
    assert [r.actual for r in per_cluster] == [1, 1, 1]
    assert [(r.cluster_id, r.count, r.actual) for r in per_agg] == [(0, 2, 2), (1, 2, 1)]
    assert per_agg[0].pixel_count == 6  # rec() gives each record 3 px


def test_match_truth_missing_aggregate_counts_zero():
    truth = SceneTruth((((2, 2), 0), ((20, 20), 1)))
    per_cluster, per_agg = match_truth([rec(1)], [Cluster(0, [(2, 3)])], truth, "pam")
    assert [(r.count, r.actual) for r in per_agg] == [(1, 1), (0, 1)]
    assert per_agg[1].method is Method.PAM
