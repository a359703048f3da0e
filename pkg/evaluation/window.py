"""
The reproducible robustness window over Delta = |pi - pi_hat| and the critical Delta.
"""

import json
import math
import os
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

import core.config as cfg

_TOL = 1e-12


@dataclass(frozen=True)
class RobustWindow:
    delta_min: float
    delta_max: float
    delta_crit: Optional[float]
    epsilon: float = cfg.window_epsilon
    w_star: float = cfg.window_w_star

    def __post_init__(self):
        if self.delta_min > self.delta_max:
            raise ValueError(f"delta_min {self.delta_min} exceeds delta_max {self.delta_max}")

    @property
    def is_degenerate(self):
        return self.delta_min == self.delta_max

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def save(self, path):
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(self.to_json())


def _aggregate(sweep):
    return sweep.aggregate() if hasattr(sweep, "aggregate") else sweep.copy()


def mark_robust(sweep, epsilon=cfg.window_epsilon, w_star=cfg.window_w_star):
    """
    Per grid point: abs_delta, ci_width and the robust flag
    (|m0 - mean| <= epsilon and CI width <= w_star, m0 the center mean).
    """
    frame = _aggregate(sweep)
    frame["abs_delta"] = np.round(frame["delta"].abs(), 10)
    center = frame[frame["abs_delta"] == 0.0]
    if center.empty:
        raise ValueError("the sweep has no center point (delta = 0)")
    m0 = float(center["mean"].iloc[0])
    frame["ci_width"] = frame["ci_high"] - frame["ci_low"]
    ill = frame["ill_conditioned"].astype(bool) | frame["mean"].isna()
    frame["robust"] = ~ill & ((m0 - frame["mean"]).abs() <= epsilon + _TOL) & (frame["ci_width"] <= w_star + _TOL)
    return frame


def robustness_window(sweep, epsilon=cfg.window_epsilon, w_star=cfg.window_w_star):
    """
    Largest contiguous robust Delta-interval starting at 0, and Delta_crit.

    A Delta counts as robust only if every grid prior at that distance (both sides of the
    center when present) is robust. A center that fails the stability rule gives the
    degenerate window [0, 0].

    Args:
        sweep (SweepResult | pd.DataFrame): Sweep or its aggregate table.
        epsilon (float): Allowed drop of the mean metric from the center.
        w_star (float): Largest CI width of a robust point.

    Returns:
        RobustWindow: delta_crit is the smallest Delta whose CI width reaches w_star, None if none does.
    """
    frame = mark_robust(sweep, epsilon, w_star)
    per_delta = frame.groupby("abs_delta", sort=True).agg(robust=("robust", "all"), width=("ci_width", "max"))

    delta_max = 0.0
    for delta, row in per_delta.iterrows():
        if not row["robust"]:
            break
        delta_max = float(delta)

    reached = per_delta.index[(per_delta["width"] >= w_star - _TOL).to_numpy()]
    delta_crit = float(reached[0]) if len(reached) else None
    return RobustWindow(0.0, delta_max, delta_crit, float(epsilon), float(w_star))


def annotate_sweep(sweep, window):
    """Aggregate table with robust / in_window / delta_crit columns for the sweep CSV."""
    frame = mark_robust(sweep, window.epsilon, window.w_star)
    frame["in_window"] = frame["robust"] & (frame["abs_delta"] <= window.delta_max + _TOL)
    crit = math.nan if window.delta_crit is None else window.delta_crit
    frame["delta_crit"] = np.isclose(frame["abs_delta"], crit)
    return frame.drop(columns=["abs_delta", "ci_width"])
