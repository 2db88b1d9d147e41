import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwshare.stats import bootstrap_ci, fifth_percentile, percentile_nearest_rank


def test_fifth_percentile_examples():
    assert fifth_percentile(np.zeros(40)) == 0.0
    assert fifth_percentile(np.arange(1, 101)) == 5.0
    assert fifth_percentile(np.full(17, 3.5)) == 3.5
    assert fifth_percentile([7.0]) == 7.0


def test_fifth_percentile_is_order_free():
    x = np.random.default_rng(0).permutation(np.arange(1, 201))
    assert fifth_percentile(x) == 10.0


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        fifth_percentile([])
    with pytest.raises(ValueError):
        bootstrap_ci([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300), st.floats(0.1, 100))
def test_nearest_rank_is_a_sample_value(xs, q):
    v = percentile_nearest_rank(xs, q)
    assert v in xs
    s = sorted(xs)
    k = int(np.ceil(q / 100 * len(xs)))
    assert v == s[max(k, 1) - 1]


def test_axis_reduction_matches_rows():
    a = np.random.default_rng(1).normal(size=(6, 50))
    row = fifth_percentile(a, axis=1)
    assert np.allclose(row, [fifth_percentile(r) for r in a])


def test_bootstrap_constant_sample():
    assert bootstrap_ci(np.full(30, 2.0), rng=0) == (2.0, 2.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=60), st.integers(0, 2**31))
def test_bootstrap_brackets_estimate(xs, seed):
    lo, hi = bootstrap_ci(xs, resamples=200, rng=seed)
    est = fifth_percentile(xs)
    assert lo <= est <= hi


def test_bootstrap_width_shrinks_like_root_n():
    rng = np.random.default_rng(2)
    small = rng.normal(size=400)
    large = rng.normal(size=1600)
    w = lambda x: np.subtract(*bootstrap_ci(x, statistic=np.mean, resamples=2000, rng=3)[::-1])
    assert w(large) / w(small) == pytest.approx(0.5, abs=0.1)


def test_bootstrap_is_reproducible():
    x = np.random.default_rng(4).exponential(size=500)
    assert bootstrap_ci(x, rng=11) == bootstrap_ci(x, rng=11)


def test_bootstrap_level_validated():
    with pytest.raises(ValueError):
        bootstrap_ci([1.0, 2.0], level=1.0)
