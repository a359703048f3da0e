import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd
import torch
from torch.optim import SGD, Adam
from torch.utils.tensorboard import SummaryWriter

import core.config as cfg
from core.errors import NonFiniteLossError
from core.rng import derive_seed, make_rng
from datagen.csv_io import write_csv
from risk.ure import ClampKind

from .objectives import NtmpObjective, StratifiedObjective, SupervisedObjective
from .scorer import Scorer, ScorerKind, predict_labels


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass
class TrainConfig:
    epochs: int = cfg.epochs
    batch_tuples: int = cfg.batch_tuples
    batch_unlabeled: Optional[int] = None          # None: batch_tuples * n
    optimizer: OptimizerKind = OptimizerKind(cfg.optimizer)
    learning_rate: float = cfg.learning_rate
    clamp_kind: ClampKind = ClampKind.NONE
    seed: int = 0
    margin_epsilon: float = cfg.margin_epsilon
    weight_decay: float = cfg.weight_decay
    scorer_kind: ScorerKind = ScorerKind.LINEAR
    hidden_width: int = cfg.hidden_width
    activation: str = cfg.activation
    log_dir: Optional[str] = None
    verbose: bool = False

    def __post_init__(self):
        self.optimizer = OptimizerKind(self.optimizer)
        self.clamp_kind = ClampKind(self.clamp_kind)
        self.scorer_kind = ScorerKind(self.scorer_kind)
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_tuples < 1 or (self.batch_unlabeled is not None and self.batch_unlabeled < 1):
            raise ValueError("batch sizes must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")

    def make_scorer(self, input_dim):
        return Scorer(input_dim, self.scorer_kind, self.hidden_width, self.activation, seed=derive_seed(self.seed, 0))


@dataclass
class TrainingTrace:
    rows: list = field(default_factory=list)

    def record(self, epoch, risk_unclamped, risk_clamped, audit_accuracy=None):
        self.rows.append({"epoch": epoch, "risk_unclamped": risk_unclamped, "risk_clamped": risk_clamped,
                          "audit_accuracy": np.nan if audit_accuracy is None else audit_accuracy})

    def __len__(self):
        return len(self.rows)

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=["epoch", "risk_unclamped", "risk_clamped", "audit_accuracy"])

    def to_csv(self, path, provenance=None):
        write_csv(self.to_frame(), path, provenance)


class Trainer:
    def __init__(self, scorer, objective, tcfg, audit=None, debug=False):
        """
        Mini-batch trainer shared by every objective.

        Args:
            scorer (Scorer): Model to train in place.
            objective (Objective): Batch source and loss.
            tcfg (TrainConfig): Optimizer and schedule.
            audit (tuple | None): (features, labels) scored after every epoch for the trace.
            debug (bool): Print per-step diagnostics.
        """
        self.scorer = scorer
        self.objective = objective
        self.tcfg = tcfg
        self.audit = audit
        self.debug = debug
        self.global_step = 0
        self.skipped_batches = 0
        self.rng = make_rng(derive_seed(tcfg.seed, 1))
        self.optimizer = self.make_optimizer()
        self.writer = SummaryWriter(tcfg.log_dir) if tcfg.log_dir else None
        self.trace = TrainingTrace()

    def make_optimizer(self):
        if self.tcfg.optimizer is OptimizerKind.ADAM:
            return Adam(self.scorer.parameters(), lr=self.tcfg.learning_rate, betas=cfg.adam_betas, eps=cfg.adam_eps,
                        weight_decay=self.tcfg.weight_decay)
        return SGD(self.scorer.parameters(), lr=self.tcfg.learning_rate, weight_decay=self.tcfg.weight_decay)

    def run(self):
        '''
        Run the training loop; returns the trained scorer and the per-epoch trace.
        '''
        for epoch in range(self.tcfg.epochs):
            unclamped, clamped = [], []
            for batch in self.objective.batches(self.rng):
                value = self.update_network(batch)
                if value is not None:
                    unclamped.append(value.unclamped)
                    clamped.append(value.clamped)

            risk_u = float(np.mean(unclamped)) if unclamped else math.nan
            risk_c = float(np.mean(clamped)) if clamped else math.nan
            accuracy = self.audit_accuracy()
            self.trace.record(epoch + 1, risk_u, risk_c, accuracy)

            if self.writer is not None:
                self.writer.add_scalar("Risk/Unclamped", risk_u, epoch)
                self.writer.add_scalar("Risk/Clamped", risk_c, epoch)
                if accuracy is not None:
                    self.writer.add_scalar("Accuracy/Audit", accuracy, epoch)
            if self.tcfg.verbose:
                extra = f", audit accuracy {accuracy:.4f}" if accuracy is not None else ""
                print(f"[INFO] Epoch {epoch + 1}/{self.tcfg.epochs}: risk {risk_u:.6f} (clamped {risk_c:.6f}){extra}")

        if self.skipped_batches and self.tcfg.verbose:
            print(f"[WARNING] Skipped {self.skipped_batches} batches with |pi - alpha_batch| below the hard threshold")
        if self.writer is not None:
            self.writer.close()
        return self.scorer, self.trace

    def update_network(self, batch):
        '''
        One optimizer step on a batch; returns the ObjectiveValue or None when the batch is skipped.
        '''
        value = self.objective.evaluate(self.scorer, batch)
        if value.weight <= 0:
            self.skipped_batches += 1
            return None
        if not torch.isfinite(value.loss):
            raise NonFiniteLossError(f"non-finite loss {value.loss.detach().item()} at step {self.global_step} "
                                     f"(unclamped {value.unclamped}, clamped {value.clamped})")
        self.optimizer.zero_grad()
        (value.weight * value.loss).backward()
        self.optimizer.step()
        if self.debug:
            print(f"[DEBUG] step {self.global_step}: loss {value.loss.detach().item():.6f} weight {value.weight:.3f}")
        self.global_step += 1
        return value

    def audit_accuracy(self):
        if self.audit is None:
            return None
        features, labels = self.audit
        return float(np.mean(predict_labels(self.scorer, features) == np.asarray(labels)))


def _default_batch_unlabeled(tcfg, tuples):
    if tcfg.batch_unlabeled is not None:
        return tcfg.batch_unlabeled
    return tcfg.batch_tuples * max(1, int(round(tuples.sizes.mean())))


def train_ntmp(tuples, pool, mix, loss, tcfg, scorer=None, audit=None):
    """
    Minimize the (clamped) empirical unbiased risk over mixed mini-batches.

    Args:
        tuples (TupleDataset): Training tuples.
        pool (UnlabeledPool): Unlabeled pool; its prior should equal mix.pi.
        mix (MixConfig): (pi, alpha) for the coefficients.
        loss (LossSpec): Surrogate.
        tcfg (TrainConfig): Training configuration (clamp_kind selects URE / ReLU / ABS).
        scorer (Scorer | None): Starting point; a fresh scorer from tcfg otherwise.
        audit (tuple | None): (features, labels) for the per-epoch audit accuracy.

    Returns:
        tuple[Scorer, TrainingTrace]: Trained scorer and trace.
    """
    mix.require_identifiable()
    batch_unlabeled = _default_batch_unlabeled(tcfg, tuples)
    if len(tuples) < tcfg.batch_tuples or len(pool) < batch_unlabeled:
        raise ValueError(f"datasets ({len(tuples)} tuples, {len(pool)} unlabeled) are smaller than the batch sizes "
                         f"({tcfg.batch_tuples}, {batch_unlabeled})")
    scorer = scorer if scorer is not None else tcfg.make_scorer(tuples.dim)
    objective = NtmpObjective(tuples, pool, mix, loss, tcfg.clamp_kind, tcfg.batch_tuples, batch_unlabeled,
                              tcfg.margin_epsilon)
    return Trainer(scorer, objective, tcfg, audit).run()


def train_stratified(plan, pool, loss, tcfg, scorer=None, audit=None):
    """Train on a TrainingPlan: instance-share and margin weighted clamped risks of every stratum."""
    batch_unlabeled = min(_default_batch_unlabeled(tcfg, plan.tuples), len(pool))
    scorer = scorer if scorer is not None else tcfg.make_scorer(plan.tuples.dim)
    objective = StratifiedObjective(plan, pool, loss, tcfg.clamp_kind, tcfg.batch_tuples, batch_unlabeled)
    return Trainer(scorer, objective, tcfg, audit).run()


def train_supervised(features, labels, loss, tcfg, scorer=None, audit=None, batch_size=None):
    """Supervised ERM on labeled instances; batch_size defaults to batch_unlabeled, else batch_tuples."""
    features = np.asarray(features, dtype=np.float64)
    scorer = scorer if scorer is not None else tcfg.make_scorer(features.shape[1])
    objective = SupervisedObjective(features, labels, loss, batch_size or tcfg.batch_unlabeled or tcfg.batch_tuples)
    return Trainer(scorer, objective, tcfg, audit).run()
