"""
The lightweight score model that separates a positive proxy from the unlabeled pool.

Scores are always returned for data the model was not trained on: a held-out split
when U is large enough, out-of-fold scores from stratified K-fold otherwise.
"""

import math
from typing import NamedTuple

import numpy as np
from sklearn.model_selection import StratifiedKFold

import core.config as cfg
from core.errors import DegenerateInputError
from core.losses import LossSpec
from core.rng import derive_seed, make_rng
from model.scorer import ScorerKind
from model.trainer import OptimizerKind, TrainConfig, train_supervised
from prior.mpe import proxy_size


class HeldOutScores(NamedTuple):
    proxy: np.ndarray
    unlabeled: np.ndarray


def validation_size(n_unlabeled):
    return max(cfg.validation_min_size, math.ceil(cfg.validation_fraction * n_unlabeled))


def score_model_config(seed, epochs=cfg.score_model_epochs):
    return TrainConfig(
        epochs=epochs,
        batch_tuples=cfg.score_model_batch_size,
        optimizer=OptimizerKind.ADAM,
        learning_rate=cfg.score_model_learning_rate,
        weight_decay=cfg.score_model_weight_decay,
        scorer_kind=ScorerKind.MLP1,
        hidden_width=cfg.score_model_width,
        activation="relu",
        seed=seed,
    )


def _fit_and_score(train_x, train_y, test_x, seed, epochs):
    scorer, _ = train_supervised(train_x, train_y, LossSpec.make("logistic"), score_model_config(seed, epochs))
    return scorer.score(test_x)


def _held_out(proxy, unlabeled, n_val, seed, epochs):
    rng = make_rng(derive_seed(seed, 0))
    u_order = rng.permutation(len(unlabeled))
    p_order = rng.permutation(len(proxy))
    # half of the proxy is held out
    n_val_p = len(proxy) // 2
    u_val, u_train = u_order[:n_val], u_order[n_val:]
    p_val, p_train = p_order[:n_val_p], p_order[n_val_p:]

    train_x = np.vstack([proxy[p_train], unlabeled[u_train]])
    train_y = np.concatenate([np.ones(len(p_train)), -np.ones(len(u_train))])
    scores = _fit_and_score(train_x, train_y, np.vstack([proxy[p_val], unlabeled[u_val]]), derive_seed(seed, 1), epochs)
    return HeldOutScores(scores[:n_val_p], scores[n_val_p:])


def _out_of_fold(proxy, unlabeled, seed, epochs):
    features = np.vstack([proxy, unlabeled])
    labels = np.concatenate([np.ones(len(proxy)), -np.ones(len(unlabeled))])
    n_splits = min(cfg.cv_folds, len(proxy), len(unlabeled))
    folds = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=int(derive_seed(seed, 0) % 2 ** 32))
    scores = np.empty(len(features))
    for k, (train_idx, test_idx) in enumerate(folds.split(features, labels)):
        scores[test_idx] = _fit_and_score(features[train_idx], labels[train_idx], features[test_idx],
                                          derive_seed(seed, 1, k), epochs)
    return HeldOutScores(scores[:len(proxy)], scores[len(proxy):])


def fit_score_model(proxy_features, unlabeled_features, seed, epochs=cfg.score_model_epochs, verbose=False):
    """
    Train the proxy-vs-unlabeled classifier and score data it has not seen.

    Args:
        proxy_features (np.ndarray): Positive proxy instances (label +1).
        unlabeled_features (np.ndarray): Unlabeled pool instances (label -1).
        seed (int): Seed for the splits and the model.
        epochs (int): Training epochs of every fitted model.
        verbose (bool): Print which validation scheme was used.

    Returns:
        HeldOutScores: (proxy scores, unlabeled scores) on the held-out split, or out-of-fold
        scores for every instance when U is too small for a held-out split.
    """
    proxy = np.asarray(getattr(proxy_features, "features", proxy_features), dtype=np.float64)
    unlabeled = np.asarray(getattr(unlabeled_features, "features", unlabeled_features), dtype=np.float64)
    if proxy.ndim != 2 or not len(proxy):
        raise DegenerateInputError("the positive proxy is empty")
    if unlabeled.ndim != 2 or not len(unlabeled):
        raise DegenerateInputError("the unlabeled pool is empty")
    if proxy.shape[1] != unlabeled.shape[1]:
        raise ValueError(f"feature dimensions differ: proxy {proxy.shape[1]}, unlabeled {unlabeled.shape[1]}")

    n_val = validation_size(len(unlabeled))
    if len(unlabeled) - n_val >= n_val and len(proxy) >= 2:
        if verbose:
            print(f"[INFO] Score model: held-out split of {n_val} unlabeled instances")
        return _held_out(proxy, unlabeled, n_val, seed, epochs)
    if len(proxy) < 2:
        raise DegenerateInputError("cross-validated scores need at least two proxy instances")
    if verbose:
        print(f"[INFO] Score model: U has {len(unlabeled)} instances, using {cfg.cv_folds}-fold out-of-fold scores")
    return _out_of_fold(proxy, unlabeled, seed, epochs)


def build_positive_proxy(scorer, tuples, fraction=cfg.proxy_fraction):
    """
    The ceil(fraction * n_T) tuple instances with the highest scores under the current model.

    Returns:
        np.ndarray: Proxy features, highest score first.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if not len(tuples):
        raise DegenerateInputError("cannot build a proxy from an empty tuple dataset")
    k = min(tuples.n_instances, proxy_size(len(tuples), fraction))
    scores = scorer.score(tuples.features)
    top = np.argsort(-scores, kind="stable")[:k]
    return tuples.features[top]
