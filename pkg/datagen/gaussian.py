import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

import core.config as cfg
from core.errors import DegenerateInputError
from core.rng import make_rng
from core.types import LabeledPool


@dataclass(frozen=True)
class GaussianTaskSpec:
    """
    Two isotropic Gaussian class-conditionals with a positive-class prior.

    Attributes:
        dim (int): Feature dimension d.
        prior_pi (float): P(y = +1), in (0, 1).
        mean_pos (tuple): Mean of p_+.
        mean_neg (tuple): Mean of p_-.
        cov_scale (float): Both classes share covariance cov_scale * I.
    """
    dim: int
    prior_pi: float
    mean_pos: tuple
    mean_neg: tuple
    cov_scale: float = cfg.default_cov_scale

    def __post_init__(self):
        object.__setattr__(self, "mean_pos", tuple(float(v) for v in self.mean_pos))
        object.__setattr__(self, "mean_neg", tuple(float(v) for v in self.mean_neg))
        if self.dim < 1 or len(self.mean_pos) != self.dim or len(self.mean_neg) != self.dim:
            raise ValueError(f"means must both have dimension {self.dim}")
        if not 0.0 < self.prior_pi < 1.0:
            raise ValueError(f"prior_pi must lie in (0, 1), got {self.prior_pi}")
        if self.cov_scale <= 0:
            raise ValueError(f"cov_scale must be positive, got {self.cov_scale}")
        if self.mean_pos == self.mean_neg:
            raise DegenerateInputError("mean_pos equals mean_neg; the task is not learnable")

    @classmethod
    def symmetric(cls, dim=cfg.default_dim, prior_pi=0.5, separation=1.0, cov_scale=cfg.default_cov_scale):
        """Means at (+separation, 0, ...) and (-separation, 0, ...)."""
        mean = np.zeros(dim)
        mean[0] = separation
        return cls(dim, prior_pi, tuple(mean), tuple(-mean), cov_scale)

    @property
    def mu_pos(self):
        return np.asarray(self.mean_pos)

    @property
    def mu_neg(self):
        return np.asarray(self.mean_neg)


def gen_gaussian_pool(spec, n_samples, seed):
    """
    Draw a labeled pool from a Gaussian task.

    Args:
        spec (GaussianTaskSpec): Task.
        n_samples (int): Pool size, at least 2.
        seed (RngSeed | int): Seed.

    Returns:
        LabeledPool: Labels ~ Bernoulli(prior_pi) mapped to {+1, -1}, features from the class conditional.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be at least 2, got {n_samples}")
    rng = make_rng(seed)
    labels = np.where(rng.random(n_samples) < spec.prior_pi, 1, -1)
    means = np.where((labels == 1)[:, None], spec.mu_pos, spec.mu_neg)
    features = means + math.sqrt(spec.cov_scale) * rng.standard_normal((n_samples, spec.dim))
    return LabeledPool(features, labels)


def bayes_log_odds(spec):
    """
    Weights (w, b) of the true log-odds log p(+1|x)/p(-1|x) = w.x + b, the minimizer of the logistic risk.
    """
    w = (spec.mu_pos - spec.mu_neg) / spec.cov_scale
    b = -(spec.mu_pos @ spec.mu_pos - spec.mu_neg @ spec.mu_neg) / (2.0 * spec.cov_scale) \
        + math.log(spec.prior_pi / (1.0 - spec.prior_pi))
    return w, float(b)


def bayes_accuracy(spec):
    """Closed-form accuracy of the Bayes (LDA) rule sign(w.x + b)."""
    delta = float(np.linalg.norm(spec.mu_pos - spec.mu_neg))
    sigma = math.sqrt(spec.cov_scale)
    c = (sigma / delta) * math.log(spec.prior_pi / (1.0 - spec.prior_pi))
    half = delta / (2.0 * sigma)
    return float(spec.prior_pi * norm.cdf(half + c) + (1.0 - spec.prior_pi) * norm.cdf(half - c))


def gaussian_task_with_prior(spec, prior):
    return replace(spec, prior_pi=float(prior))
