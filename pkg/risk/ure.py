"""
Empirical unbiased risk for NTMP data, its clamped variants and gradients.

R_T collects the two expectations over the flattened tuples, R_U the two over the
unlabeled pool; the clamped objective is f(R_T) + f(R_U) with f in {ReLU, |.|}.
"""

import json
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
import torch

import core.config as cfg
from core.losses import partial_loss
from model.scorer import as_tensor

from .identification import ure_coefficients


class ClampKind(str, Enum):
    NONE = "none"
    RELU = "relu"
    ABS = "abs"


@dataclass(frozen=True)
class RiskComponents:
    r_tuple: float
    r_unlabeled: float
    total_unclamped: float
    total_clamped: float
    clamp_kind: ClampKind = ClampKind.NONE

    def to_dict(self):
        out = asdict(self)
        out["clamp_kind"] = ClampKind(self.clamp_kind).value
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        data["clamp_kind"] = ClampKind(data["clamp_kind"])
        return cls(**data)


def clamp_tensor(z, kind):
    """
    f(z) on a tensor. Subgradient at z = 0 is 0 for ReLU and +1 for Abs.
    """
    kind = ClampKind(kind)
    if kind is ClampKind.NONE:
        return z
    if kind is ClampKind.RELU:
        return torch.where(z > 0, z, torch.zeros_like(z))
    return torch.where(z >= 0, z, -z)


def _clamp_value(z, kind):
    kind = ClampKind(kind)
    if kind is ClampKind.RELU:
        return max(z, 0.0)
    if kind is ClampKind.ABS:
        return abs(z)
    return z


def _features(data):
    return getattr(data, "features", data)


def in_tuple_weights(tuples, weighting):
    """
    Per-instance weights for the tuple expectations, or None for uniform averaging.

    Args:
        tuples (TupleDataset): Dataset whose tuples are weighted.
        weighting (None | "uniform" | sequence): Position weights (a_1, ..., a_n), nonnegative and
            summing to 1; only defined when every tuple has the same length n.

    Returns:
        torch.Tensor | None: (sum n_t,) weights whose tuple sums are 1.
    """
    if weighting is None or (isinstance(weighting, str) and weighting == "uniform"):
        return None
    weights = np.asarray(weighting, dtype=np.float64)
    if len(np.unique(tuples.sizes)) != 1 or weights.shape != (int(tuples.sizes[0]),):
        raise ValueError(f"weight vector of length {weights.size} does not match tuple length(s) "
                         f"{sorted(set(tuples.sizes.tolist()))}")
    if (weights < 0).any() or not np.isclose(weights.sum(), 1.0, atol=1e-9):
        raise ValueError("in-tuple weights must be nonnegative and sum to 1")
    return torch.as_tensor(np.tile(weights, len(tuples)))


def risk_terms(scores_t, scores_u, coeffs, loss, instance_weights=None):
    """
    (R_T, R_U) as differentiable tensors.

    Args:
        scores_t (torch.Tensor): Raw scores of the flattened tuple instances.
        scores_u (torch.Tensor): Raw scores of the unlabeled instances.
        coeffs (UreCoefficients): Signed weights of the four expectations.
        loss (LossSpec): Surrogate.
        instance_weights (torch.Tensor | None): From in_tuple_weights().
    """
    phi_t = partial_loss(loss, scores_t, 1)
    psi_t = partial_loss(loss, scores_t, -1)
    if instance_weights is None:
        e_t_pos, e_t_neg = phi_t.mean(), psi_t.mean()
    else:
        n_tuples = instance_weights.sum()
        e_t_pos = (instance_weights * phi_t).sum() / n_tuples
        e_t_neg = (instance_weights * psi_t).sum() / n_tuples
    r_t = coeffs.c_t_pos * e_t_pos + coeffs.c_t_neg * e_t_neg
    r_u = coeffs.c_u_pos * partial_loss(loss, scores_u, 1).mean() \
        + coeffs.c_u_neg * partial_loss(loss, scores_u, -1).mean()
    return r_t, r_u


def ure_objective(scorer, features_t, features_u, coeffs, loss, clamp_kind=ClampKind.NONE, instance_weights=None):
    """Clamped total f(R_T) + f(R_U) with the graph attached, plus the raw components."""
    r_t, r_u = risk_terms(scorer(as_tensor(features_t)), scorer(as_tensor(features_u)), coeffs, loss,
                          instance_weights)
    return clamp_tensor(r_t, clamp_kind) + clamp_tensor(r_u, clamp_kind), r_t, r_u


def clamp(components, kind):
    """
    Recompute total_clamped = f(r_tuple) + f(r_unlabeled); the unclamped fields are preserved.
    """
    kind = ClampKind(kind)
    if kind is ClampKind.NONE:
        total = components.total_unclamped
    else:
        total = _clamp_value(components.r_tuple, kind) + _clamp_value(components.r_unlabeled, kind)
    return RiskComponents(components.r_tuple, components.r_unlabeled, components.total_unclamped, total, kind)


def empirical_ure(scorer, tuples, pool, mix, loss, weighting=None, clamp_kind=ClampKind.NONE):
    """
    Plug-in unbiased risk of a scorer.

    Args:
        scorer (Scorer): Scorer g.
        tuples (TupleDataset): Tuple data (labels never consulted).
        pool (UnlabeledPool | np.ndarray): Unlabeled instances.
        mix (MixConfig): (pi, alpha) plugged into the coefficients.
        loss (LossSpec): Surrogate.
        weighting (None | "uniform" | sequence): In-tuple position weights.
        clamp_kind (ClampKind): Clamp reported in total_clamped.

    Returns:
        RiskComponents: R_T, R_U and totals.
    """
    if not len(tuples) or not len(_features(pool)):
        raise ValueError("empirical_ure needs nonempty tuple and unlabeled data")
    coeffs = ure_coefficients(mix)
    weights = in_tuple_weights(tuples, weighting)
    with torch.no_grad():
        _, r_t, r_u = ure_objective(scorer, tuples.features, _features(pool), coeffs, loss, ClampKind.NONE, weights)
    r_t, r_u = float(r_t), float(r_u)
    return clamp(RiskComponents(r_t, r_u, r_t + r_u, r_t + r_u, ClampKind.NONE), clamp_kind)


def ure_gradient(scorer, batch_tuples, batch_pool, mix, loss, clamp_kind=ClampKind.NONE):
    """
    Gradient of f(R_T) + f(R_U) with respect to the scorer parameters.

    Returns:
        np.ndarray: Flat gradient in the order of scorer.parameters().
    """
    if not len(_features(batch_tuples)) or not len(_features(batch_pool)):
        raise ValueError("ure_gradient needs a nonempty batch")
    coeffs = ure_coefficients(mix)
    total, _, _ = ure_objective(scorer, _features(batch_tuples), _features(batch_pool), coeffs, loss, clamp_kind)
    params = list(scorer.parameters())
    grads = torch.autograd.grad(total, params, allow_unused=True)
    return torch.cat([(g if g is not None else torch.zeros_like(p)).reshape(-1)
                      for g, p in zip(grads, params)]).numpy().copy()


def supervised_risk(scorer, features, labels, loss):
    """The audit-label oracle R(g) = mean l(g(x), y)."""
    with torch.no_grad():
        scores = scorer(as_tensor(features))
        return float(partial_loss(loss, scores, torch.as_tensor(np.asarray(labels, dtype=np.float64))).mean())


def margin_weight(pi, alpha_batch, epsilon=cfg.margin_epsilon):
    """
    Batch weight min(1, (|pi - alpha_batch| / epsilon)^2); 0 below the hard threshold (batch skipped).
    """
    gap = abs(float(pi) - float(alpha_batch))
    if gap < cfg.hard_gap:
        return 0.0
    if epsilon <= 0:
        return 1.0
    return min(1.0, (gap / epsilon) ** 2)
