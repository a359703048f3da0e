"""
Training objectives pluggable into the Trainer.

An objective yields the mini-batches of one epoch and turns a batch into an
ObjectiveValue: the loss tensor to minimize, its unclamped / clamped values for the
trace and a batch weight (0 skips the batch).
"""

import math
from dataclasses import dataclass

import numpy as np
import torch

from core.losses import partial_loss
from risk.identification import ure_coefficients
from risk.stratify import stratified_objective
from risk.ure import ClampKind, margin_weight, ure_objective

from .scorer import as_tensor


@dataclass
class ObjectiveValue:
    loss: torch.Tensor
    unclamped: float
    clamped: float
    weight: float = 1.0


def sample_indices(rng, population, size):
    return rng.choice(population, size=min(size, population), replace=False)


def steps_per_epoch(n_items, batch_size):
    return max(1, math.ceil(n_items / batch_size))


class Objective:
    """Base class: subclasses implement batches() and evaluate()."""

    def batches(self, rng):
        raise NotImplementedError

    def evaluate(self, scorer, batch):
        raise NotImplementedError


class NtmpObjective(Objective):
    def __init__(self, tuples, pool, mix, loss, clamp_kind, batch_tuples, batch_unlabeled, margin_epsilon):
        """
        Mixed mini-batches of tuples and unlabeled points for the (clamped) unbiased risk.

        Args:
            tuples (TupleDataset): Training tuples.
            pool (UnlabeledPool): Unlabeled pool.
            mix (MixConfig): Global (pi, alpha) used for the coefficients.
            loss (LossSpec): Surrogate.
            clamp_kind (ClampKind): Stability clamp.
            batch_tuples (int): Tuples per batch.
            batch_unlabeled (int): Unlabeled points per batch.
            margin_epsilon (float): Batches with |pi - alpha_batch| < epsilon are down-weighted.
        """
        self.tuples = tuples
        self.features_u = pool.features
        self.mix = mix
        self.coeffs = ure_coefficients(mix)
        self.loss = loss
        self.clamp_kind = ClampKind(clamp_kind)
        self.batch_tuples = batch_tuples
        self.batch_unlabeled = batch_unlabeled
        self.margin_epsilon = margin_epsilon

    def batches(self, rng):
        for _ in range(steps_per_epoch(len(self.tuples), self.batch_tuples)):
            tuple_idx = sample_indices(rng, len(self.tuples), self.batch_tuples)
            yield tuple_idx, sample_indices(rng, len(self.features_u), self.batch_unlabeled)

    def evaluate(self, scorer, batch):
        tuple_idx, pool_idx = batch
        alpha_batch = self.tuples.counts[tuple_idx].sum() / self.tuples.sizes[tuple_idx].sum()
        weight = margin_weight(self.mix.pi, alpha_batch, self.margin_epsilon)
        features_t = self.tuples.features[self.tuples.rows_of(tuple_idx)]
        total, r_t, r_u = ure_objective(scorer, features_t, self.features_u[pool_idx], self.coeffs, self.loss,
                                        self.clamp_kind)
        return ObjectiveValue(total, (r_t + r_u).detach().item(), total.detach().item(), weight)


class StratifiedObjective(Objective):
    def __init__(self, plan, pool, loss, clamp_kind, batch_tuples, batch_unlabeled):
        self.plan = plan
        self.features_u = pool.features
        self.loss = loss
        self.clamp_kind = ClampKind(clamp_kind)
        self.batch_tuples = batch_tuples
        self.batch_unlabeled = batch_unlabeled

    def batches(self, rng):
        for _ in range(steps_per_epoch(len(self.plan.tuples), self.batch_tuples)):
            picks = [s.tuple_index[sample_indices(rng, len(s.tuple_index), self.batch_tuples)]
                     for s in self.plan.strata]
            yield picks, sample_indices(rng, len(self.features_u), self.batch_unlabeled)

    def evaluate(self, scorer, batch):
        picks, pool_idx = batch
        tuples = self.plan.tuples
        per_stratum = [(s, tuples.features[tuples.rows_of(idx)]) for s, idx in zip(self.plan.strata, picks)]
        total, unclamped, clamped = stratified_objective(scorer, per_stratum, self.features_u[pool_idx],
                                                         self.plan.pi_hat, self.loss, self.clamp_kind)
        weight = 1.0 if total.requires_grad else 0.0
        return ObjectiveValue(total, unclamped, clamped, weight)


class SupervisedObjective(Objective):
    """Plain ERM on labeled instances (the oracle trainer, pseudo-label baselines and the score model)."""

    def __init__(self, features, labels, loss, batch_size):
        self.features = np.asarray(features, dtype=np.float64)
        self.labels = torch.as_tensor(np.asarray(labels, dtype=np.float64))
        self.loss = loss
        self.batch_size = batch_size

    def batches(self, rng):
        order = rng.permutation(len(self.features))
        for start in range(0, len(order), self.batch_size):
            yield order[start:start + self.batch_size]

    def evaluate(self, scorer, batch):
        value = partial_loss(self.loss, scorer(as_tensor(self.features[batch])),
                             self.labels[torch.as_tensor(batch)]).mean()
        return ObjectiveValue(value, value.detach().item(), value.detach().item())
