"""
Splitting labeled pools into disjoint roles and turning them into unlabeled pools.
"""

import numpy as np

from core.rng import make_rng
from core.types import PriorSource, UnlabeledPool


def split_pool(pool, fractions, seed):
    """
    Split a labeled pool into disjoint parts.

    Args:
        pool (LabeledPool): Source pool.
        fractions (sequence of float): Share of each part; must sum to at most 1.
        seed (RngSeed | int): Seed for the shuffle.

    Returns:
        list[LabeledPool]: One pool per fraction, in order.
    """
    fractions = np.asarray(fractions, dtype=np.float64)
    if (fractions < 0).any() or fractions.sum() > 1.0 + 1e-12:
        raise ValueError(f"fractions must be nonnegative and sum to at most 1, got {fractions.tolist()}")
    order = make_rng(seed).permutation(len(pool))
    cuts = np.floor(np.cumsum(fractions) * len(pool)).astype(np.int64)
    starts = np.concatenate([[0], cuts[:-1]])
    return [pool.subset(order[lo:hi]) for lo, hi in zip(starts, cuts)]


def strip_labels(pool, declared_prior=None, prior_source=PriorSource.KNOWN_BY_CONSTRUCTION):
    """Drop the labels; by default the declared prior is the pool's true positive fraction."""
    prior = pool.prior if declared_prior is None else declared_prior
    return UnlabeledPool(pool.features, prior, prior_source)


def resample_pool_to_prior(pool, target_prior, seed):
    """
    Subsample one class so the positive fraction matches target_prior as closely as the counts allow.

    Args:
        pool (LabeledPool): Source pool; nothing is duplicated.
        target_prior (float): Desired positive fraction in (0, 1).
        seed (RngSeed | int): Seed.

    Returns:
        LabeledPool: The largest subsample of the pool with the requested prior.
    """
    if not 0.0 < target_prior < 1.0:
        raise ValueError(f"target_prior must lie in (0, 1), got {target_prior}")
    rng = make_rng(seed)
    pos = np.flatnonzero(pool.labels == 1)
    neg = np.flatnonzero(pool.labels == -1)
    keep_pos = min(len(pos), int(np.floor(target_prior / (1.0 - target_prior) * len(neg))))
    keep_neg = min(len(neg), int(np.floor((1.0 - target_prior) / target_prior * keep_pos)))
    keep = np.concatenate([rng.choice(pos, keep_pos, replace=False), rng.choice(neg, keep_neg, replace=False)])
    return pool.subset(np.sort(keep))
