"""
Paired significance tests, multiple-comparison adjustment, effect sizes and bootstrap intervals
for comparing methods across seeds.
"""

import warnings

import numpy as np
from scipy.stats import norm, rankdata

import core.config as cfg
from core.rng import make_rng


def _paired_differences(paired_a, paired_b):
    a = np.asarray(paired_a, dtype=np.float64).reshape(-1)
    b = np.asarray(paired_b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.size} vs {b.size}")
    return a - b


def _exact_tails(doubled_ranks, t_doubled):
    """(P(T+ >= t), P(T+ <= t)) under the sign-flip null; ranks are doubled so tied averages stay integral."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    counts /= counts.sum()
    return float(counts[t_doubled:].sum()), float(counts[:t_doubled + 1].sum())


def wilcoxon_signed_rank(paired_a, paired_b, exact_max_n=cfg.wilcoxon_exact_max_n, correction=True):
    """
    Two-sided Wilcoxon signed-rank test of paired_a against paired_b.

    Zero differences are dropped. Up to exact_max_n remaining pairs the p-value comes
    from the exact null distribution of T+ (tied ranks included); above that from the
    normal approximation with tie-corrected variance.

    Args:
        paired_a (np.ndarray): Per-seed values of one method.
        paired_b (np.ndarray): Per-seed values of the other method, same order.
        exact_max_n (int): Largest number of non-zero pairs handled exactly.
        correction (bool): Continuity correction in the normal approximation.

    Returns:
        float: Two-sided p-value; 1.0 (with a warning) below five non-zero differences.
    """
    diff = _paired_differences(paired_a, paired_b)
    diff = diff[diff != 0]
    n = diff.size
    if n < cfg.wilcoxon_min_nonzero:
        warnings.warn(f"only {n} non-zero paired differences; reporting p = 1", RuntimeWarning, stacklevel=2)
        return 1.0

    ranks = rankdata(np.abs(diff))
    t_plus = float(ranks[diff > 0].sum())
    if n <= exact_max_n:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        upper, lower = _exact_tails(doubled, int(round(2.0 * t_plus)))
        return float(min(1.0, 2.0 * min(upper, lower)))

    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_sizes ** 3 - tie_sizes).sum() / 48.0
    if var <= 0:
        return 1.0
    shift = abs(t_plus - mean)
    if correction:
        shift = max(0.0, shift - 0.5)
    return float(min(1.0, 2.0 * norm.sf(shift / np.sqrt(var))))


def holm_adjust(p_values):
    """
    Holm step-down adjustment; returned in the input order.

    Examples:
        (0.01, 0.02, 0.04) -> (0.03, 0.04, 0.04)
    """
    p = np.asarray(p_values, dtype=np.float64).reshape(-1)
    if ((p < 0) | (p > 1)).any():
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = np.minimum(1.0, (m - np.arange(m)) * p[order])
    adjusted = np.empty(m)
    adjusted[order] = np.maximum.accumulate(scaled)
    return adjusted


def cliffs_delta(values_ours, values_other):
    """(#{x > y} - #{x < y}) / (n_x n_y); positive values favor values_ours."""
    x = np.asarray(values_ours, dtype=np.float64).reshape(-1)
    y = np.asarray(values_other, dtype=np.float64).reshape(-1)
    if not x.size or not y.size:
        raise ValueError("cliffs_delta needs two nonempty samples")
    return float(np.sign(np.subtract.outer(x, y)).mean())


def cliffs_magnitude(delta):
    size = abs(delta)
    if size < 0.147:
        return "negligible"
    if size < 0.33:
        return "small"
    if size < 0.474:
        return "medium"
    return "large"


def bootstrap_ci(values, b=cfg.metric_bootstrap_b, level=cfg.ci_level, seed=0, chunk=2000):
    """
    Percentile bootstrap interval of the mean.

    Args:
        values (np.ndarray): Observations (e.g. one metric value per seed).
        b (int): Number of resamples.
        level (float): Confidence level.
        seed (int): Resampling seed.

    Returns:
        tuple[float, float]: (low, high).
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size < 2:
        raise ValueError(f"bootstrap_ci needs at least 2 values, got {values.size}")
    if b < 1:
        raise ValueError(f"b must be positive, got {b}")
    rng = make_rng(seed)
    means = np.empty(b)
    for start in range(0, b, chunk):
        size = min(chunk, b - start)
        means[start:start + size] = values[rng.integers(0, values.size, size=(size, values.size))].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(means, [tail, 100.0 - tail])
    return float(low), float(high)
