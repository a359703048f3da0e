"""
UU learning: risk reconstruction from two unlabeled sets with distinct known priors.

In the NTMP setting the unlabeled pool is set 1 (prior pi) and the flattened tuple
instances are set 2 (prior alpha); UUcor is the same objective with the Abs clamp.
"""

from dataclasses import dataclass

import numpy as np
import torch

import core.config as cfg
from core.errors import IllConditionedError
from model.objectives import Objective, ObjectiveValue, sample_indices, steps_per_epoch
from model.trainer import Trainer
from risk.identification import MixConfig, ure_coefficients
from risk.ure import ClampKind, RiskComponents, clamp, ure_objective


@dataclass(frozen=True)
class UuConfig:
    prior_1: float
    prior_2: float
    clamp_kind: ClampKind = ClampKind.NONE

    def __post_init__(self):
        object.__setattr__(self, "clamp_kind", ClampKind(self.clamp_kind))
        for name in ("prior_1", "prior_2"):
            value = float(getattr(self, name))
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
            object.__setattr__(self, name, value)
        if abs(self.prior_1 - self.prior_2) < cfg.hard_gap:
            raise IllConditionedError(abs(self.prior_1 - self.prior_2))

    @property
    def mix(self):
        # set 1 takes the role of U, set 2 the role of the flattened tuples
        return MixConfig(self.prior_1, self.prior_2, 0.0)


def _features(data):
    return np.asarray(getattr(data, "features", data), dtype=np.float64)


def uu_risk(scorer, pool_1, pool_2, ucfg, loss):
    """
    Reconstructed risk of a scorer from two unlabeled sets.

    Args:
        scorer (Scorer): Scorer g.
        pool_1 (UnlabeledPool | np.ndarray): Set with prior ucfg.prior_1.
        pool_2 (UnlabeledPool | TupleDataset | np.ndarray): Set with prior ucfg.prior_2.
        ucfg (UuConfig): Priors and clamp.
        loss (LossSpec): Surrogate.

    Returns:
        RiskComponents: r_tuple is the set-2 part, r_unlabeled the set-1 part.
    """
    features_1, features_2 = _features(pool_1), _features(pool_2)
    if not len(features_1) or not len(features_2):
        raise ValueError("uu_risk needs two nonempty sets")
    with torch.no_grad():
        _, r_2, r_1 = ure_objective(scorer, features_2, features_1, ure_coefficients(ucfg.mix), loss)
    r_2, r_1 = float(r_2), float(r_1)
    return clamp(RiskComponents(r_2, r_1, r_2 + r_1, r_2 + r_1), ucfg.clamp_kind)


class UuObjective(Objective):
    """Instance batches drawn independently from the two sets."""

    def __init__(self, pool_1, pool_2, ucfg, loss, batch_1, batch_2):
        self.features_1 = _features(pool_1)
        self.features_2 = _features(pool_2)
        self.coeffs = ure_coefficients(ucfg.mix)
        self.clamp_kind = ucfg.clamp_kind
        self.loss = loss
        self.batch_1 = batch_1
        self.batch_2 = batch_2

    def batches(self, rng):
        for _ in range(steps_per_epoch(len(self.features_2), self.batch_2)):
            yield (sample_indices(rng, len(self.features_1), self.batch_1),
                   sample_indices(rng, len(self.features_2), self.batch_2))

    def evaluate(self, scorer, batch):
        idx_1, idx_2 = batch
        total, r_2, r_1 = ure_objective(scorer, self.features_2[idx_2], self.features_1[idx_1], self.coeffs,
                                        self.loss, self.clamp_kind)
        return ObjectiveValue(total, (r_1 + r_2).detach().item(), total.detach().item())


def train_uu(pool_1, pool_2, ucfg, loss, tcfg, scorer=None, audit=None):
    """
    Train on the UU objective; tcfg.batch_tuples * (mean tuple length) instances of set 2 per
    batch when set 2 is a TupleDataset, tcfg.batch_tuples otherwise.
    """
    sizes = getattr(pool_2, "sizes", None)
    batch_2 = tcfg.batch_tuples * (max(1, int(round(sizes.mean()))) if sizes is not None else 1)
    batch_1 = tcfg.batch_unlabeled or batch_2
    features_2 = _features(pool_2)
    scorer = scorer if scorer is not None else tcfg.make_scorer(features_2.shape[1])
    objective = UuObjective(pool_1, pool_2, ucfg, loss, batch_1, min(batch_2, len(features_2)))
    return Trainer(scorer, objective, tcfg, audit).run()

