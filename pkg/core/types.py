"""
Domain types: instances, labeled/unlabeled pools and tuple datasets.

Features are stored as one contiguous float64 matrix per pool or dataset; the
per-instance / per-tuple record views are built on demand.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np


class PriorSource(str, Enum):
    KNOWN_BY_CONSTRUCTION = "known_by_construction"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class InstanceSample:
    features: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        if self.label is not None and self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")


def _as_features(features):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError(f"features must be a 2-D array (n_samples, d), got shape {features.shape}")
    return features


class LabeledPool:
    """Feature vectors with ground-truth labels in {+1, -1}; the prior is computed, never declared."""

    def __init__(self, features, labels):
        self.features = _as_features(features)
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(f"expected {self.features.shape[0]} labels, got shape {self.labels.shape}")
        if not np.isin(self.labels, (1, -1)).all():
            raise ValueError("labels must be +1 or -1")

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def prior(self):
        return float(np.mean(self.labels == 1)) if len(self) else float("nan")

    @property
    def samples(self):
        return [InstanceSample(x, int(y)) for x, y in zip(self.features, self.labels)]

    def subset(self, index):
        return LabeledPool(self.features[index], self.labels[index])


class UnlabeledPool:
    """Feature vectors without labels, carrying the prior plugged into the risk."""

    def __init__(self, features, declared_prior, prior_source=PriorSource.KNOWN_BY_CONSTRUCTION):
        self.features = _as_features(features)
        self.declared_prior = float(declared_prior)
        if not 0.0 < self.declared_prior < 1.0:
            raise ValueError(f"declared_prior must lie strictly inside (0, 1), got {self.declared_prior}")
        self.prior_source = PriorSource(prior_source)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def samples(self):
        return [InstanceSample(x) for x in self.features]

    def with_prior(self, declared_prior, prior_source=None):
        return UnlabeledPool(self.features, declared_prior, prior_source or self.prior_source)


@dataclass(frozen=True)
class TupleRecord:
    instances: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.m <= self.n:
            raise ValueError(f"need n >= 1 and 0 <= m <= n, got (n, m) = ({self.n}, {self.m})")
        if len(self.instances) != self.n:
            raise ValueError(f"tuple declares n = {self.n} but holds {len(self.instances)} instances")

    @property
    def alpha(self):
        return Fraction(self.m, self.n)


@dataclass
class TupleDataset:
    """
    A collection of tuples stored flat.

    Attributes:
        features (np.ndarray): (sum n_t, d) instance features, tuple after tuple.
        sizes (np.ndarray): n_t per tuple.
        counts (np.ndarray): declared m_t per tuple.
        instance_indices (np.ndarray | None): Index of every instance in its source pool.
    """
    features: np.ndarray
    sizes: np.ndarray
    counts: np.ndarray
    instance_indices: Optional[np.ndarray] = None
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.features = _as_features(self.features)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.sizes.shape != self.counts.shape or self.sizes.ndim != 1:
            raise ValueError("sizes and counts must be 1-D arrays of equal length")
        if (self.sizes < 1).any() or (self.counts < 0).any() or (self.counts > self.sizes).any():
            raise ValueError("every tuple needs n >= 1 and 0 <= m <= n")
        if int(self.sizes.sum()) != self.features.shape[0]:
            raise ValueError(f"sizes sum to {int(self.sizes.sum())} but {self.features.shape[0]} instances were given")
        if self.instance_indices is not None:
            self.instance_indices = np.asarray(self.instance_indices, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])

    def __len__(self):
        return len(self.sizes)

    def __getitem__(self, i):
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return TupleRecord(self.features[lo:hi], int(self.sizes[i]), int(self.counts[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def tuples(self):
        return list(self)

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def n_instances(self):
        return self.features.shape[0]

    @property
    def tuple_ids(self):
        return np.repeat(np.arange(len(self)), self.sizes)

    @property
    def alphas(self):
        return self.counts / self.sizes

    @property
    def effective_alpha(self):
        """Per-instance weighted mean of alpha_t, i.e. sum m_t / sum n_t, as an exact fraction."""
        return Fraction(int(self.counts.sum()), int(self.sizes.sum()))

    @property
    def is_fixed(self):
        return len(np.unique(self.sizes)) == 1 and len(np.unique(self.counts)) == 1

    def rows_of(self, tuple_index):
        """Instance rows of the given tuples, in the order the tuples are listed."""
        tuple_index = np.asarray(tuple_index, dtype=np.int64)
        if not len(tuple_index):
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(self.offsets[i], self.offsets[i + 1]) for i in tuple_index])

    def subset(self, tuple_index):
        tuple_index = np.asarray(tuple_index, dtype=np.int64)
        rows = self.rows_of(tuple_index)
        indices = self.instance_indices[rows] if self.instance_indices is not None else None
        return TupleDataset(self.features[rows], self.sizes[tuple_index], self.counts[tuple_index], indices)

    def with_counts(self, counts):
        return TupleDataset(self.features, self.sizes, counts, self.instance_indices)


@dataclass(frozen=True)
class AuditSidecar:
    """Ground-truth labels of a TupleDataset's instances, row-aligned with its features. Oracle use only."""
    labels: np.ndarray

    def positive_fraction(self):
        return float(np.mean(self.labels == 1))

    def tuple_counts(self, dataset):
        """Hidden positive count of every tuple."""
        return np.add.reduceat((self.labels == 1).astype(np.int64), dataset.offsets[:-1]) \
            if len(dataset) else np.zeros(0, dtype=np.int64)

    def subset(self, dataset, tuple_index):
        return AuditSidecar(self.labels[dataset.rows_of(tuple_index)])
