"""Summary statistics for per-UE rate samples."""

import math

import numpy as np


def fifth_percentile(samples, axis=None):
    """Nearest-rank 5th percentile: the ceil(0.05 N)-th smallest value."""
    return percentile_nearest_rank(samples, 5.0, axis=axis)


def percentile_nearest_rank(samples, q, axis=None):
    a = np.asarray(samples, dtype=float)
    if axis is None:
        a = a.ravel()
        axis = 0
    n = a.shape[axis]
    if n == 0:
        raise ValueError("percentile of an empty sample")
    k = max(1, math.ceil(q / 100.0 * n))
    out = np.take(np.partition(a, k - 1, axis=axis), k - 1, axis=axis)
    return float(out) if np.ndim(out) == 0 else out


def bootstrap_ci(samples, statistic=fifth_percentile, level=0.95, resamples=1000,
                 rng=None, batch=200):
    """Percentile bootstrap interval.

    `statistic` must accept an ``axis`` keyword (numpy reductions and
    :func:`fifth_percentile` both do) so resamples are evaluated in batches.
    """
    a = np.asarray(samples, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("bootstrap of an empty sample")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    rng = np.random.default_rng(rng)
    stats = []
    for start in range(0, resamples, batch):
        b = min(batch, resamples - start)
        idx = rng.integers(0, a.size, size=(b, a.size))
        stats.append(np.asarray(statistic(a[idx], axis=1), dtype=float))
    stats = np.concatenate(stats)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [tail, 1.0 - tail])
    # the percentile interval of a nearest-rank statistic may miss the point
    # estimate on tiny samples; widen to keep lo <= estimate <= hi
    est = float(statistic(a, axis=0))
    return float(min(lo, est)), float(max(hi, est))
