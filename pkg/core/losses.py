"""
Margin-form surrogate losses phi(t) = l(t, +1), psi(t) = l(t, -1) = phi(-t).

All losses are evaluated on scores clipped to [-score_clip, score_clip] so that every
surrogate is bounded and Lipschitz on the range the theory works with.
"""

import math
from dataclasses import dataclass
from enum import Enum

import torch
import torch.nn.functional as F

import core.config as cfg


class LossKind(str, Enum):
    LOGISTIC = "logistic"
    SIGMOID = "sigmoid"
    SQUARED_HINGE = "squared_hinge"


def _bounds(kind, clip):
    if kind is LossKind.LOGISTIC:
        return 1.0, math.log1p(math.exp(clip))
    if kind is LossKind.SIGMOID:
        return 0.25, 1.0
    # squared hinge: phi(t) = max(0, 1 - t)^2, steepest and largest at t = -clip
    return 2.0 * (1.0 + clip), (1.0 + clip) ** 2


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    lipschitz_rho: float
    bound_B: float

    @classmethod
    def make(cls, kind=cfg.default_loss, clip=cfg.score_clip):
        """
        Build a LossSpec whose constants hold on the clipped score range.

        Args:
            kind (LossKind | str): Surrogate name.
            clip (float): Score clipping radius C_g.

        Returns:
            LossSpec: Loss with its Lipschitz constant and bound (B = C_l = max{phi(C_g), psi(C_g)}).
        """
        kind = LossKind(kind)
        rho, bound = _bounds(kind, clip)
        return cls(kind=kind, lipschitz_rho=rho, bound_B=bound)


def clip_scores(scores, clip=cfg.score_clip):
    return torch.clamp(scores, -clip, clip)


def phi(kind, t):
    """phi(t) = l(t, +1) elementwise on a tensor of margins."""
    kind = LossKind(kind)
    if kind is LossKind.LOGISTIC:
        return F.softplus(-t)
    if kind is LossKind.SIGMOID:
        return torch.sigmoid(-t)
    return torch.relu(1.0 - t) ** 2


def phi_grad(kind, t):
    kind = LossKind(kind)
    if kind is LossKind.LOGISTIC:
        return -torch.sigmoid(-t)
    if kind is LossKind.SIGMOID:
        return -torch.sigmoid(t) * torch.sigmoid(-t)
    return -2.0 * torch.relu(1.0 - t)


def partial_loss(spec, scores, label):
    """
    l(g(x), label) for a batch of raw scores.

    Args:
        spec (LossSpec): Surrogate.
        scores (torch.Tensor): Raw scores g(x); clipped here.
        label (int | torch.Tensor): +1 / -1, scalar or per-score.

    Returns:
        torch.Tensor: Elementwise losses.
    """
    return phi(spec.kind, label * clip_scores(scores))


def _as_margin(margin):
    margin = float(margin)
    if not math.isfinite(margin):
        raise ValueError(f"margin must be finite, got {margin}")
    return torch.tensor(margin, dtype=torch.float64)


def loss_value(spec, margin):
    """phi(margin); psi(margin) is loss_value(spec, -margin)."""
    return phi(spec.kind, _as_margin(margin)).item()


def loss_grad(spec, margin):
    """d phi / dt at margin."""
    return phi_grad(spec.kind, _as_margin(margin)).item()
