"""
Bias bounds for a misspecified class prior or randomly misspecified tuple counts, and the
population plug-in risks they control.

An infinite return value marks an unbounded result (zero conditioning margin).
"""

import math
from dataclasses import dataclass

import torch

from core.losses import partial_loss
from model.scorer import as_tensor

UNBOUNDED = math.inf


def is_unbounded(value):
    return math.isinf(value)


def _check_prior(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def _interval_distance(a, b, point):
    """min over xi in [min(a, b), max(a, b)] of |xi - point|."""
    lo, hi = min(a, b), max(a, b)
    if lo <= point <= hi:
        return 0.0
    return min(abs(lo - point), abs(hi - point))


def prior_gamma(pi, pi_hat, alpha):
    return _interval_distance(float(pi), float(pi_hat), float(alpha))


def count_eta(pi, alpha, alpha_hat):
    return _interval_distance(float(alpha), float(alpha_hat), float(pi))


def prior_bias_bound(B, delta_abs, pi, pi_hat, alpha):
    """
    sup_g |R~(g; pi_hat) - R(g)| <= 2 B |delta| / gamma^2.

    Args:
        B (float): Loss bound.
        delta_abs (float): |pi_hat - pi|.
        pi (float): True prior.
        pi_hat (float): Plugged-in prior.
        alpha (float): Tuple mixing weight.

    Returns:
        float: The bound, or UNBOUNDED when alpha lies between pi and pi_hat.
    """
    _check_prior("pi", pi)
    _check_prior("pi_hat", pi_hat)
    gamma = prior_gamma(pi, pi_hat, alpha)
    if gamma <= 0:
        return UNBOUNDED
    return 2.0 * B * abs(delta_abs) / gamma ** 2


def prior_excess_risk_bound(B, delta_abs, pi, pi_hat, alpha):
    return 2.0 * prior_bias_bound(B, delta_abs, pi, pi_hat, alpha)


def count_bias_bound(B, expected_abs_alpha_err, eta_lower):
    """(2B / eta^2) E|alpha_hat - alpha|; UNBOUNDED when eta_lower <= 0."""
    if eta_lower <= 0:
        return UNBOUNDED
    return 2.0 * B * expected_abs_alpha_err / eta_lower ** 2


def count_bias_bound_sigma(B, sigma_alpha, eta_lower):
    """Variance form: E|alpha_hat - alpha| <= sigma_alpha."""
    return count_bias_bound(B, sigma_alpha, eta_lower)


def count_bias_bound_uniform(B, epsilon, eta_lower):
    """Almost-sure form for |alpha_hat - alpha| <= epsilon."""
    return count_bias_bound(B, epsilon, eta_lower)


def count_bias_bound_subgaussian(B, proxy_std, eta_lower, delta):
    """Holds with probability 1 - delta when alpha_hat - alpha is sub-Gaussian with proxy variance v^2."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return count_bias_bound(B, proxy_std * math.sqrt(2.0 * math.log(1.0 / delta)), eta_lower)


def count_excess_risk_bound(B, expected_abs_alpha_err, eta_lower):
    return 2.0 * count_bias_bound(B, expected_abs_alpha_err, eta_lower)


@dataclass(frozen=True)
class ClassRisks:
    """The four class-conditional expectations E_+[phi(g)], E_+[phi(-g)], E_-[phi(g)], E_-[phi(-g)]."""
    pos_phi: float
    pos_psi: float
    neg_phi: float
    neg_psi: float

    def true_risk(self, pi):
        return pi * self.pos_phi + (1.0 - pi) * self.neg_psi


def class_conditional_risks(scorer, pos_features, neg_features, loss):
    with torch.no_grad():
        s_pos = scorer(as_tensor(pos_features))
        s_neg = scorer(as_tensor(neg_features))
        return ClassRisks(
            pos_phi=float(partial_loss(loss, s_pos, 1).mean()),
            pos_psi=float(partial_loss(loss, s_pos, -1).mean()),
            neg_phi=float(partial_loss(loss, s_neg, 1).mean()),
            neg_psi=float(partial_loss(loss, s_neg, -1).mean()),
        )


def _plugin_risk(risks, pi, pi_used, alpha_used, alpha_true):
    # marginals under the true (pi, alpha)
    phi_u = pi * risks.pos_phi + (1.0 - pi) * risks.neg_phi
    psi_u = pi * risks.pos_psi + (1.0 - pi) * risks.neg_psi
    phi_t = alpha_true * risks.pos_phi + (1.0 - alpha_true) * risks.neg_phi
    psi_t = alpha_true * risks.pos_psi + (1.0 - alpha_true) * risks.neg_psi
    det = pi_used - alpha_used
    e_pos_phi = ((1.0 - alpha_used) * phi_u - (1.0 - pi_used) * phi_t) / det
    e_neg_psi = (pi_used * psi_t - alpha_used * psi_u) / det
    return pi * e_pos_phi + (1.0 - pi) * e_neg_psi


def misspecified_prior_risk(risks, pi, pi_hat, alpha):
    """Population plug-in risk R~(g; pi_hat) when pi_hat replaces pi inside the inversion."""
    if abs(pi_hat - alpha) <= 0:
        return UNBOUNDED
    return _plugin_risk(risks, pi, pi_hat, alpha, alpha)


def misspecified_count_risk(risks, pi, alpha, alpha_hat):
    """Population plug-in risk R~(g; alpha_hat) when alpha_hat replaces the true alpha."""
    if abs(pi - alpha_hat) <= 0:
        return UNBOUNDED
    return _plugin_risk(risks, pi, pi, alpha_hat, alpha)
