"""
K-Means / K-Means++ baselines: two clusters mapped to labels by matching cluster sizes to
the declared prior, and the clustering + classifier variant.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.cluster import KMeans

import core.config as cfg
from core.errors import DegenerateInputError
from core.losses import LossSpec
from model.trainer import train_supervised


class KMeansInit(str, Enum):
    FORGY = "forgy"
    PLUS_PLUS = "plusplus"


_SKLEARN_INIT = {KMeansInit.FORGY: "random", KMeansInit.PLUS_PLUS: "k-means++"}


@dataclass
class ClusterAssignment:
    """Labels of the clustered pool plus the nearest-centroid rule for new points."""
    labels: np.ndarray
    positive_center: np.ndarray
    negative_center: np.ndarray
    n_iter: int

    def score(self, features):
        """||x - c_-||^2 - ||x - c_+||^2: positive on the positive cluster's side."""
        features = np.asarray(getattr(features, "features", features), dtype=np.float64)
        d_pos = ((features - self.positive_center) ** 2).sum(axis=1)
        d_neg = ((features - self.negative_center) ** 2).sum(axis=1)
        return d_neg - d_pos

    def predict(self, features):
        return np.where(self.score(features) > 0, 1, -1)


def _first_principal_direction(features):
    centered = features - features.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    direction = vt[0]
    # sign fixed so the largest-magnitude component is positive
    return direction if direction[np.argmax(np.abs(direction))] >= 0 else -direction


def kmeans_prior_matched(pool, init=KMeansInit.FORGY, declared_prior=None, seed=0):
    """
    Two-cluster Lloyd K-Means with prior-matched labels.

    The cluster whose size fraction is nearer the declared prior becomes +1; on a tie the
    cluster with the larger mean projection on the first principal direction is +1. Rows
    are clustered in lexicographic order, so the assignment does not depend on input order.

    Args:
        pool (UnlabeledPool | np.ndarray): Points to cluster.
        init (KMeansInit): Forgy (random observations) or K-Means++ seeding.
        declared_prior (float | None): Prior to match; pool.declared_prior when None.
        seed (int): Seed of the initialization.

    Returns:
        ClusterAssignment: +1 / -1 label per input row, in input order.
    """
    features = np.asarray(getattr(pool, "features", pool), dtype=np.float64)
    prior = getattr(pool, "declared_prior", None) if declared_prior is None else declared_prior
    if prior is None or not 0.0 < float(prior) < 1.0:
        raise ValueError(f"declared_prior must lie in (0, 1), got {prior}")
    if features.ndim != 2 or len(np.unique(features, axis=0)) < 2:
        raise DegenerateInputError("K-Means needs at least two distinct points")

    order = np.lexsort(features.T[::-1])
    canonical = features[order]
    model = KMeans(n_clusters=2, init=_SKLEARN_INIT[KMeansInit(init)], n_init=1, max_iter=cfg.kmeans_max_iter,
                   tol=cfg.kmeans_tol, algorithm="lloyd", random_state=int(seed) % 2 ** 32)
    clusters = np.empty(len(features), dtype=np.int64)
    clusters[order] = model.fit_predict(canonical)

    fractions = np.array([np.mean(clusters == k) for k in (0, 1)])
    distance = np.abs(fractions - float(prior))
    if np.isclose(distance[0], distance[1], rtol=0.0, atol=1e-12):
        projection = features @ _first_principal_direction(features)
        means = [projection[clusters == k].mean() for k in (0, 1)]
        positive = int(np.argmax(means))
    else:
        positive = int(np.argmin(distance))

    labels = np.where(clusters == positive, 1, -1)
    centers = model.cluster_centers_
    return ClusterAssignment(labels, centers[positive].copy(), centers[1 - positive].copy(), int(model.n_iter_))


def clustering_classifier(pool, init, declared_prior, seed, tcfg, loss=None, audit=None):
    """
    Train a scorer on K-Means pseudo-labels of the pool.

    Returns:
        tuple[Scorer, TrainingTrace, ClusterAssignment]
    """
    assignment = kmeans_prior_matched(pool, init, declared_prior, seed)
    features = np.asarray(getattr(pool, "features", pool), dtype=np.float64)
    scorer, trace = train_supervised(features, assignment.labels, loss or LossSpec.make("logistic"), tcfg,
                                     audit=audit)
    return scorer, trace, assignment
