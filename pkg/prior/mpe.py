"""
Class-prior estimation from score samples: the NP-style lower bound and the kernel
tail-ratio mixture-proportion estimate with its bootstrap interval.

Tail CDFs are oriented as F(t) = P(score > t). The proxy sample is assumed to be
(mostly) positive, so F_U(t) / F_P(t) approaches the positive proportion of U on the
right tail of the proxy distribution.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import beta, norm
from sklearn.isotonic import isotonic_regression

import core.config as cfg
from core.errors import DegenerateInputError
from core.rng import make_rng


@dataclass(frozen=True)
class PriorEstimate:
    pi_hat: float
    ci_low: float
    ci_high: float
    np_lower_bound: float = 0.0
    lb_ci: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 < self.pi_hat <= 1.0:
            raise ValueError(f"pi_hat must lie in (0, 1], got {self.pi_hat}")
        if not self.ci_low <= self.pi_hat <= self.ci_high:
            raise ValueError(f"interval [{self.ci_low}, {self.ci_high}] does not contain pi_hat {self.pi_hat}")

    def with_lower_bound(self, pi_lb, band):
        return PriorEstimate(self.pi_hat, self.ci_low, self.ci_high, float(pi_lb), tuple(float(b) for b in band))

    def to_json(self):
        out = asdict(self)
        out["lb_ci"] = list(self.lb_ci)
        return json.dumps(out, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        data["lb_ci"] = tuple(data["lb_ci"])
        return cls(**data)


def _as_scores(name, scores):
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if not scores.size:
        raise ValueError(f"{name} must be nonempty")
    if not np.isfinite(scores).all():
        raise ValueError(f"{name} contains non-finite values")
    return scores


def silverman_bandwidth(scores):
    """
    h = 0.9 * min(std, IQR / 1.34) * n^(-1/5).

    The IQR term is dropped when it vanishes on a non-constant sample.
    """
    scores = _as_scores("scores", scores)
    sigma = float(np.std(scores, ddof=1)) if scores.size > 1 else 0.0
    if sigma <= 0.0:
        raise DegenerateInputError("cannot pick a bandwidth for a sample of identical scores")
    q75, q25 = np.percentile(scores, [75, 25])
    spread = min(sigma, (q75 - q25) / 1.34) if q75 > q25 else sigma
    return 0.9 * spread * scores.size ** (-0.2)


def _tail_kernel(scores, grid, h):
    # (n, G) matrix of Phi((s_i - t_j) / h)
    return norm.cdf((scores[:, None] - np.asarray(grid, dtype=np.float64)[None, :]) / h)


def kernel_tail_cdf(scores, grid, h, weights=None):
    """
    Gaussian-kernel smoothed survival function P(score > t) on a grid.

    Args:
        scores (np.ndarray): Sample of scores.
        grid (np.ndarray): Thresholds t.
        h (float): Kernel bandwidth.
        weights (np.ndarray | None): Per-sample weights (e.g. bootstrap counts); uniform when None.

    Returns:
        np.ndarray: Nonincreasing values in [0, 1], one per grid point.
    """
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    scores = _as_scores("scores", scores)
    kernel = _tail_kernel(scores, grid, h)
    if weights is None:
        return kernel.mean(axis=0)
    weights = np.asarray(weights, dtype=np.float64)
    return weights @ kernel / weights.sum()


def clopper_pearson(k, n, level=cfg.ci_level):
    """
    Exact binomial interval for k successes out of n.

    Returns:
        tuple[float, float]: (lower, upper); lower is 0 at k = 0 and upper is 1 at k = n.
    """
    k, n = int(k), int(n)
    if n <= 0 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n and n > 0, got k={k}, n={n}")
    tail = (1.0 - level) / 2.0
    lower = 0.0 if k == 0 else float(beta.ppf(tail, k, n - k + 1))
    upper = 1.0 if k == n else float(beta.ppf(1.0 - tail, k + 1, n - k))
    return lower, upper


def np_lower_bound(scores_pos_proxy, scores_unlabeled, n_thresholds=cfg.n_thresholds, level=cfg.ci_level):
    """
    NP-style lower bound max_t {TPR(t) - FPR(t)}_+ with a Clopper-Pearson band.

    TPR is the proxy rate and FPR the unlabeled rate of score > t, with n_thresholds
    thresholds evenly spaced over the pooled score range.

    Returns:
        tuple[float, tuple[float, float]]: pi_lb and the band at the maximizing threshold.
    """
    proxy = _as_scores("proxy scores", scores_pos_proxy)
    unlabeled = _as_scores("unlabeled scores", scores_unlabeled)
    if n_thresholds < 2:
        raise ValueError(f"n_thresholds must be at least 2, got {n_thresholds}")

    pooled = np.concatenate([proxy, unlabeled])
    thresholds = np.linspace(pooled.min(), pooled.max(), n_thresholds)
    proxy_sorted, unlabeled_sorted = np.sort(proxy), np.sort(unlabeled)
    k_pos = proxy.size - np.searchsorted(proxy_sorted, thresholds, side="right")
    k_unl = unlabeled.size - np.searchsorted(unlabeled_sorted, thresholds, side="right")
    gain = k_pos / proxy.size - k_unl / unlabeled.size

    best = int(np.argmax(gain))
    pi_lb = max(0.0, float(gain[best]))
    tpr_lo, tpr_hi = clopper_pearson(k_pos[best], proxy.size, level)
    fpr_lo, fpr_hi = clopper_pearson(k_unl[best], unlabeled.size, level)
    band = (float(np.clip(tpr_lo - fpr_hi, 0.0, 1.0)), float(np.clip(tpr_hi - fpr_lo, 0.0, 1.0)))
    return pi_lb, band


def _ratio_precision(f_p, f_u, n_p, n_u):
    # inverse relative variance of F_U / F_P; the lower tail grid points count most
    rel_var = 1.0 / (n_u * np.maximum(f_u, 1.0 / n_u)) + 1.0 / (n_p * f_p)
    return 1.0 / rel_var


def _monotone_max(ratio, precision):
    """Largest value of the weighted isotonic fit of the ratio curve (grid ordered from the top quantile down)."""
    fitted = isotonic_regression(ratio[::-1], sample_weight=precision[::-1], increasing=True)
    return float(fitted[-1])


def _bootstrap_estimates(kernel_p, kernel_u, precision, bootstrap_b, rng, chunk=256):
    n_p, n_u = kernel_p.shape[0], kernel_u.shape[0]
    out = np.empty(bootstrap_b)
    for start in range(0, bootstrap_b, chunk):
        size = min(chunk, bootstrap_b - start)
        counts_p = rng.multinomial(n_p, np.full(n_p, 1.0 / n_p), size=size)
        counts_u = rng.multinomial(n_u, np.full(n_u, 1.0 / n_u), size=size)
        f_p = counts_p @ kernel_p / n_p
        f_u = counts_u @ kernel_u / n_u
        for b in range(size):
            ratio = f_u[b] / np.maximum(f_p[b], np.finfo(np.float64).tiny)
            out[start + b] = _monotone_max(ratio, precision)
    return out


def mpe_estimate(scores_pos_proxy, scores_unlabeled, grid_quantiles=(cfg.mpe_quantile_low, cfg.mpe_quantile_high),
                 grid_points=cfg.mpe_grid_points, bootstrap_b=cfg.prior_bootstrap_b, seed=0, level=cfg.ci_level,
                 ci_method="percentile"):
    """
    Mixture-proportion estimate pi_hat = max over the grid of the monotone F_U / F_P ratio.

    Args:
        scores_pos_proxy (np.ndarray): Scores of the positive proxy.
        scores_unlabeled (np.ndarray): Scores of the unlabeled sample.
        grid_quantiles (tuple[float, float]): Quantile range of the proxy scores spanned by the grid.
        grid_points (int): Grid size.
        bootstrap_b (int): Resamples for the interval; 0 gives the degenerate interval [pi_hat, pi_hat].
        seed (int): Seed of the resampling.
        level (float): Confidence level of the interval.
        ci_method (str): "percentile", or "bias_corrected" for the reflected interval.

    Returns:
        PriorEstimate: pi_hat in (0, 1] and its interval; the lower-bound fields are left at their defaults.
    """
    proxy = _as_scores("proxy scores", scores_pos_proxy)
    unlabeled = _as_scores("unlabeled scores", scores_unlabeled)
    low, high = grid_quantiles
    if not 0.0 <= low < high <= 1.0:
        raise ValueError(f"grid quantiles must satisfy 0 <= low < high <= 1, got {grid_quantiles}")
    if ci_method not in ("percentile", "bias_corrected"):
        raise ValueError(f"unknown interval method {ci_method!r}")

    # one bandwidth for both samples keeps the ratio exactly 1 when U matches the proxy
    h = silverman_bandwidth(proxy)
    grid = np.quantile(proxy, np.linspace(low, high, grid_points))
    kernel_p = _tail_kernel(proxy, grid, h)
    kernel_u = _tail_kernel(unlabeled, grid, h)
    f_p, f_u = kernel_p.mean(axis=0), kernel_u.mean(axis=0)
    if (f_p <= 0).any():
        raise DegenerateInputError("proxy tail CDF vanishes on the quantile grid")

    precision = _ratio_precision(f_p, f_u, proxy.size, unlabeled.size)
    floor = 1.0 / unlabeled.size
    pi_hat = float(np.clip(_monotone_max(f_u / f_p, precision), floor, 1.0))
    if bootstrap_b <= 0:
        return PriorEstimate(pi_hat, pi_hat, pi_hat)

    boot = np.clip(_bootstrap_estimates(kernel_p, kernel_u, precision, bootstrap_b, make_rng(seed)), floor, 1.0)
    tail = 100.0 * (1.0 - level) / 2.0
    q_low, q_high = np.percentile(boot, [tail, 100.0 - tail])
    if ci_method == "bias_corrected":
        q_low, q_high = 2.0 * pi_hat - q_high, 2.0 * pi_hat - q_low
    ci_low = float(min(max(q_low, 0.0), pi_hat))
    ci_high = float(max(min(q_high, 1.0), pi_hat))
    return PriorEstimate(pi_hat, ci_low, ci_high)


def gaussian_np_bound(shift):
    """max_t Phi(t) - Phi(t - shift) for unit-variance Gaussians, attained at t = shift / 2."""
    return float(2.0 * norm.cdf(shift / 2.0) - 1.0) if shift > 0 else 0.0


def proxy_size(n_tuples, fraction=cfg.proxy_fraction):
    return max(1, math.ceil(fraction * n_tuples))
