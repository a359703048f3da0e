"""
Stratify-and-solve for heterogeneous tuples whose effective alpha sits too close to pi_hat.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import torch

import core.config as cfg
from core.errors import UnsplittableDegenerateError
from model.scorer import as_tensor

from .identification import MixConfig, ure_coefficients
from .ure import ClampKind, clamp_tensor, margin_weight, risk_terms


@dataclass
class Stratum:
    tuple_index: np.ndarray
    alpha: Fraction
    weight: float                   # instance share of the stratum
    margin: float                   # min(1, (|pi_hat - alpha| / tau)^2)

    @property
    def downweighted(self):
        return self.margin < 1.0


@dataclass
class TrainingPlan:
    tuples: object
    pi_hat: float
    tau: float
    split_rule: str
    strata: list = field(default_factory=list)

    def dataset(self, k):
        return self.tuples.subset(self.strata[k].tuple_index)

    @property
    def is_single(self):
        return len(self.strata) == 1


def _stratum(tuples, index, pi_hat, tau):
    index = np.asarray(index, dtype=np.int64)
    alpha = Fraction(int(tuples.counts[index].sum()), int(tuples.sizes[index].sum()))
    weight = float(tuples.sizes[index].sum()) / float(tuples.sizes.sum())
    return Stratum(index, alpha, weight, margin_weight(pi_hat, alpha, tau))


def _alpha_split(tuples, pi_hat, tau):
    """Best cut between consecutive distinct alpha_t values; None with a single alpha value."""
    alphas = [Fraction(int(m), int(n)) for n, m in zip(tuples.sizes, tuples.counts)]
    distinct = sorted(set(alphas))
    if len(distinct) < 2:
        return None
    keys = np.array([distinct.index(a) for a in alphas])
    best, best_score = None, -1.0
    for cut in range(1, len(distinct)):
        low = _stratum(tuples, np.flatnonzero(keys < cut), pi_hat, tau)
        high = _stratum(tuples, np.flatnonzero(keys >= cut), pi_hat, tau)
        score = min(abs(float(low.alpha) - pi_hat), abs(float(high.alpha) - pi_hat))
        if score > best_score:
            best, best_score = [low, high], score
    return best


def _median_n_split(tuples, pi_hat, tau):
    median = np.median(tuples.sizes)
    low_idx = np.flatnonzero(tuples.sizes <= median)
    high_idx = np.flatnonzero(tuples.sizes > median)
    if not len(low_idx) or not len(high_idx):
        return None
    strata = [_stratum(tuples, low_idx, pi_hat, tau), _stratum(tuples, high_idx, pi_hat, tau)]
    return strata if strata[0].alpha != strata[1].alpha else None


def stratify_and_solve(tuples, pi_hat, tau=cfg.stratify_tau, rule="alpha"):
    """
    Plan the strata to train on.

    Args:
        tuples (TupleDataset): Possibly heterogeneous tuples.
        pi_hat (float): Prior plugged into the risk.
        tau (float): Gap under which the tuples are split.
        rule (str): "alpha" partitions by distinct alpha_t (falling back to the median-n split),
            "median_n" tries the median split on n_t first.

    Returns:
        TrainingPlan: One stratum when |alpha_bar - pi_hat| >= tau, otherwise two strata with distinct alpha_bar.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if rule not in ("alpha", "median_n"):
        raise ValueError(f"unknown split rule {rule!r}")
    if not len(tuples):
        raise ValueError("cannot stratify an empty tuple dataset")
    pi_hat = float(pi_hat)
    everything = np.arange(len(tuples))
    alpha_bar = tuples.effective_alpha
    if abs(float(alpha_bar) - pi_hat) >= tau:
        return TrainingPlan(tuples, pi_hat, tau, "single", [_stratum(tuples, everything, pi_hat, tau)])

    splitters = [("alpha", _alpha_split), ("median_n", _median_n_split)]
    if rule == "median_n":
        splitters.reverse()
    for name, splitter in splitters:
        strata = splitter(tuples, pi_hat, tau)
        if strata is not None:
            return TrainingPlan(tuples, pi_hat, tau, name, strata)

    # a single alpha value: no partition can separate the strata
    if abs(float(alpha_bar) - pi_hat) < cfg.hard_gap:
        raise UnsplittableDegenerateError(alpha_bar)
    return TrainingPlan(tuples, pi_hat, tau, "single", [_stratum(tuples, everything, pi_hat, tau)])


def stratified_objective(scorer, batches, features_u, pi_hat, loss, clamp_kind=ClampKind.ABS):
    """
    Differentiable aggregate sum_k weight_k * margin_k * [f(R_T^k) + f(R_U^k)].

    Args:
        batches (list[tuple[Stratum, np.ndarray]]): Per stratum, the tuple-instance features to use.
        features_u (np.ndarray): Unlabeled features shared by every stratum.

    Returns:
        tuple[torch.Tensor, float, float]: Objective and the weighted unclamped / clamped values.
    """
    scores_u = scorer(as_tensor(features_u))
    total = torch.zeros((), dtype=torch.float64)
    unclamped = 0.0
    for stratum, features_t in batches:
        if stratum.margin <= 0 or not len(features_t):
            continue
        # the margin weight replaces the small-gap warning here
        coeffs = ure_coefficients(MixConfig(pi_hat, float(stratum.alpha), 0.0))
        r_t, r_u = risk_terms(scorer(as_tensor(features_t)), scores_u, coeffs, loss)
        w = stratum.weight * stratum.margin
        total = total + w * (clamp_tensor(r_t, clamp_kind) + clamp_tensor(r_u, clamp_kind))
        unclamped += w * (r_t + r_u).detach().item()
    return total, unclamped, total.detach().item()


def stratified_risk(scorer, plan, pool, loss, clamp_kind=ClampKind.ABS):
    """Full-data value of the stratified objective."""
    features_u = getattr(pool, "features", pool)
    batches = [(s, plan.tuples.features[plan.tuples.rows_of(s.tuple_index)]) for s in plan.strata]
    with torch.no_grad():
        _, unclamped, clamped = stratified_objective(scorer, batches, features_u, plan.pi_hat, loss, clamp_kind)
    return unclamped, clamped
