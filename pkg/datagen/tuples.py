"""
NTMP tuple construction: every tuple holds exactly m hidden positives among n instances.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from core.errors import InfeasibleTupleSpecError
from core.rng import make_rng
from core.types import AuditSidecar, TupleDataset


class ReplacementMode(str, Enum):
    WITHOUT_REPLACEMENT = "without_replacement"
    WITH_REPLACEMENT = "with_replacement"


@dataclass(frozen=True)
class TupleBuildSpec:
    """
    How to draw tuples from a labeled pool.

    Attributes:
        n (int): Tuple length (ignored when variable_nm is given).
        m (int): Positive count per tuple (ignored when variable_nm is given).
        n_tuples (int): Number of tuples n_T.
        replacement (ReplacementMode): Whether pool indices may be reused.
        variable_nm (tuple | None): ((n, m, weight), ...) configurations drawn per tuple.
    """
    n: int = 3
    m: int = 1
    n_tuples: int = 1000
    replacement: ReplacementMode = ReplacementMode.WITHOUT_REPLACEMENT
    variable_nm: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "replacement", ReplacementMode(self.replacement))
        if self.n_tuples < 1:
            raise ValueError(f"n_tuples must be positive, got {self.n_tuples}")
        if self.variable_nm is None:
            _check_nm(self.n, self.m)
            return
        configs = tuple((int(n), int(m), float(w)) for n, m, w in self.variable_nm)
        if not configs:
            raise ValueError("variable_nm must list at least one (n, m, weight) configuration")
        for n, m, w in configs:
            _check_nm(n, m)
            if w < 0:
                raise ValueError(f"configuration weights must be nonnegative, got {w}")
        if not math.isclose(sum(w for _, _, w in configs), 1.0, abs_tol=1e-9):
            raise ValueError("variable_nm weights must sum to 1")
        object.__setattr__(self, "variable_nm", configs)

    @property
    def is_variable(self):
        return self.variable_nm is not None


def _check_nm(n, m):
    if n < 1 or not 0 <= m <= n:
        raise ValueError(f"need n >= 1 and 0 <= m <= n, got (n, m) = ({n}, {m})")


def _draw_sizes(spec, rng):
    if not spec.is_variable:
        return np.full(spec.n_tuples, spec.n, dtype=np.int64), np.full(spec.n_tuples, spec.m, dtype=np.int64)
    ns = np.array([c[0] for c in spec.variable_nm], dtype=np.int64)
    ms = np.array([c[1] for c in spec.variable_nm], dtype=np.int64)
    weights = np.array([c[2] for c in spec.variable_nm])
    pick = rng.choice(len(ns), size=spec.n_tuples, p=weights / weights.sum())
    return ns[pick], ms[pick]


def build_tuples(pool, spec, seed):
    """
    Draw n_T tuples from a labeled pool under the exact-count constraint.

    Args:
        pool (LabeledPool): Source pool with ground-truth labels.
        spec (TupleBuildSpec): Tuple configuration.
        seed (RngSeed | int): Seed.

    Returns:
        tuple[TupleDataset, AuditSidecar]: The label-free tuples and the separate ground-truth sidecar.
    """
    rng = make_rng(seed)
    sizes, counts = _draw_sizes(spec, rng)
    pos = np.flatnonzero(pool.labels == 1)
    neg = np.flatnonzero(pool.labels == -1)
    need_pos = int(counts.sum())
    need_neg = int((sizes - counts).sum())

    if spec.replacement is ReplacementMode.WITHOUT_REPLACEMENT:
        if need_pos > len(pos) or need_neg > len(neg):
            raise InfeasibleTupleSpecError(need_pos, len(pos), need_neg, len(neg))
        pos_draw = rng.permutation(pos)[:need_pos]
        neg_draw = rng.permutation(neg)[:need_neg]
    else:
        if (need_pos and not len(pos)) or (need_neg and not len(neg)):
            raise InfeasibleTupleSpecError(need_pos, len(pos), need_neg, len(neg))
        pos_draw = rng.choice(pos, size=need_pos, replace=True) if need_pos else pos[:0]
        neg_draw = rng.choice(neg, size=need_neg, replace=True) if need_neg else neg[:0]

    # slot layout: the first m_t slots of every tuple are positives
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    tuple_id = np.repeat(np.arange(len(sizes)), sizes)
    position = np.arange(offsets[-1]) - offsets[tuple_id]
    is_pos = position < counts[tuple_id]
    indices = np.empty(offsets[-1], dtype=np.int64)
    indices[is_pos] = pos_draw
    indices[~is_pos] = neg_draw

    # uniform shuffle inside each tuple
    order = np.lexsort((rng.random(offsets[-1]), tuple_id))
    indices = indices[order]

    dataset = TupleDataset(pool.features[indices], sizes, counts, indices)
    return dataset, AuditSidecar(pool.labels[indices].copy())


def flatten(dataset):
    """
    Pool every tuple member into one instance matrix.

    Returns:
        tuple[np.ndarray, Fraction]: (sum n_t, d) instances and the mixture weight alpha (or alpha-bar).
    """
    if not len(dataset):
        raise ValueError("cannot flatten an empty tuple dataset")
    return dataset.features, dataset.effective_alpha


def corrupt_counts(dataset, flip_prob, seed):
    """
    Replace each tuple's declared m by m +/- 1 with probability flip_prob; the instances are untouched.

    Args:
        dataset (TupleDataset): Clean tuples.
        flip_prob (float): Per-tuple flip probability in [0, 1].
        seed (RngSeed | int): Seed.

    Returns:
        TupleDataset: Same instances, corrupted counts clamped to [0, n_t].
    """
    if not 0.0 <= flip_prob <= 1.0:
        raise ValueError(f"flip_prob must lie in [0, 1], got {flip_prob}")
    rng = make_rng(seed)
    flip = rng.random(len(dataset)) < flip_prob
    direction = rng.choice(np.array([-1, 1]), size=len(dataset))
    counts = np.clip(dataset.counts + flip * direction, 0, dataset.sizes)
    return dataset.with_counts(counts)
