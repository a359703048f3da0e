import numpy as np

from core.types import LabeledPool, UnlabeledPool


class FeatureNormalizer:
    def __init__(self, feature_dim):
        """
        Initialize the Feature Normalizer.

        Args:
            feature_dim (int): Dimension of the feature vector.
        """
        self.mean = np.zeros(feature_dim)
        self.var = np.ones(feature_dim)

    def fit(self, features):
        """
        Fit mean and variance on a feature matrix (usually the unlabeled pool).

        Args:
            features (np.array): (n_samples, feature_dim) matrix.

        Returns:
            FeatureNormalizer: self.
        """
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] < 2:
            raise ValueError("at least two samples are needed to fit a normalizer")
        self.mean = features.mean(axis=0)
        self.var = features.var(axis=0)
        return self

    def normalize(self, features):
        """
        Normalize features.

        Args:
            features (np.array): (n_samples, feature_dim) matrix.

        Returns:
            normalized (np.array): Standardized features.
        """
        std = np.sqrt(self.var + 1e-8)  # Avoid division by zero
        return (np.asarray(features, dtype=np.float64) - self.mean) / std

    def normalize_pool(self, pool):
        if isinstance(pool, LabeledPool):
            return LabeledPool(self.normalize(pool.features), pool.labels)
        if isinstance(pool, UnlabeledPool):
            return UnlabeledPool(self.normalize(pool.features), pool.declared_prior, pool.prior_source)
        raise TypeError(f"cannot normalize a {type(pool).__name__}")
