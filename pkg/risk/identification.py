"""
The 2x2 mixing system linking (p_U, flattened p_T) to (p_+, p_-).

    p_U   = pi    * p_+ + (1 - pi)    * p_-
    p_T~  = alpha * p_+ + (1 - alpha) * p_-

The determinant is pi - alpha; everything here requires |pi - alpha| >= hard_gap.
"""

import warnings
from dataclasses import dataclass
from fractions import Fraction

import core.config as cfg
from core.errors import IllConditionedError


@dataclass(frozen=True)
class MixConfig:
    pi: float
    alpha: float
    min_gap_epsilon: float = cfg.margin_epsilon

    def __post_init__(self):
        object.__setattr__(self, "pi", float(self.pi))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"pi must lie in (0, 1), got {self.pi}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.min_gap_epsilon < 0:
            raise ValueError(f"min_gap_epsilon must be nonnegative, got {self.min_gap_epsilon}")

    @property
    def gap(self):
        return abs(self.pi - self.alpha)

    def require_identifiable(self):
        """Raise IllConditionedError below the hard threshold; warn below the design margin."""
        if self.gap < cfg.hard_gap:
            raise IllConditionedError(self.gap)
        if self.gap < self.min_gap_epsilon:
            warnings.warn(f"|pi - alpha| = {self.gap:.4f} is below the design margin {self.min_gap_epsilon}; "
                          "the risk estimate will have high variance", RuntimeWarning, stacklevel=3)


@dataclass(frozen=True)
class UreCoefficients:
    c_u_pos: float
    c_t_pos: float
    c_u_neg: float
    c_t_neg: float

    def as_tuple(self):
        return self.c_u_pos, self.c_t_pos, self.c_u_neg, self.c_t_neg


def identify_conditionals(p_u_val, p_t_val, mix):
    """
    Invert the mixing system at one point.

    Args:
        p_u_val (float): Unlabeled marginal density p_U(x) >= 0.
        p_t_val (float): Flattened tuple marginal density p_T~(x) >= 0.
        mix (MixConfig): (pi, alpha).

    Returns:
        tuple[float, float]: (p_+(x), p_-(x)).
    """
    if p_u_val < 0 or p_t_val < 0:
        raise ValueError(f"densities must be nonnegative, got p_U = {p_u_val}, p_T = {p_t_val}")
    mix.require_identifiable()
    det = mix.pi - mix.alpha
    p_pos = ((1.0 - mix.alpha) * p_u_val - (1.0 - mix.pi) * p_t_val) / det
    p_neg = (mix.pi * p_t_val - mix.alpha * p_u_val) / det
    return p_pos, p_neg


def ure_coefficients(mix):
    """
    Signed weights of the four expectations in the unbiased risk:

        R(g) = c_u_pos E_U[l(g,+1)] + c_t_pos E_T[l(g,+1)] + c_u_neg E_U[l(g,-1)] + c_t_neg E_T[l(g,-1)]
    """
    mix.require_identifiable()
    pi, alpha = mix.pi, mix.alpha
    det = pi - alpha
    return UreCoefficients(
        c_u_pos=pi * (1.0 - alpha) / det,
        c_t_pos=-pi * (1.0 - pi) / det,
        c_u_neg=-(1.0 - pi) * alpha / det,
        c_t_neg=(1.0 - pi) * pi / det,
    )


def effective_alpha(tuples):
    """Sum m_t / sum n_t as an exact Fraction."""
    if not len(tuples):
        raise ValueError("effective_alpha needs at least one tuple")
    return Fraction(tuples.effective_alpha)
