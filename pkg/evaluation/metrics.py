"""
Classification, ranking and calibration metrics on audit labels in {+1, -1}.

Scorers emit margins; probabilities are sigmoid(score).
"""

import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar
from scipy.special import expit
from scipy.stats import spearmanr
from sklearn.metrics import average_precision_score, brier_score_loss, confusion_matrix, precision_recall_curve, \
    roc_auc_score

import core.config as cfg
from core.errors import DegenerateInputError
from datagen.csv_io import write_csv


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    tpr: float
    fpr: float
    precision: float
    f1: float
    macro_f1: float
    ap: float
    auroc: float
    ece: float
    brier: float
    ece_ts: float
    brier_ts: float
    temperature: float

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def to_frame(self):
        return pd.DataFrame([self.to_dict()])

    def to_csv_row(self, path, provenance=None):
        write_csv(self.to_frame(), path, provenance)


def _labels(audit_labels):
    labels = np.asarray(audit_labels).reshape(-1)
    if not np.isin(labels, (1, -1)).all():
        raise ValueError("audit labels must be +1 or -1")
    return labels.astype(np.int64)


def _paired(values, audit_labels, name):
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    labels = _labels(audit_labels)
    if values.shape != labels.shape:
        raise ValueError(f"{name} and labels differ in length: {values.size} vs {labels.size}")
    if not values.size:
        raise ValueError(f"{name} must be nonempty")
    return values, labels


def _probabilities(probabilities, audit_labels):
    p, labels = _paired(probabilities, audit_labels, "probabilities")
    if ((p < 0) | (p > 1)).any():
        raise ValueError("probabilities must lie in [0, 1]")
    return p, labels


def _ratio(num, den):
    return float(num) / float(den) if den else 0.0


def _f1(precision, recall):
    return 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def sigmoid(scores):
    return expit(np.asarray(scores, dtype=np.float64))


def confusion_metrics(predictions, audit_labels):
    """
    Threshold metrics of +/-1 predictions.

    Precision with no predicted positives and F1 with precision + recall = 0 are 0.

    Returns:
        tuple[float, ...]: (accuracy, tpr, fpr, precision, f1, macro_f1).
    """
    predictions, labels = _paired(predictions, audit_labels, "predictions")
    if not np.isin(predictions, (1, -1)).all():
        raise ValueError("predictions must be +1 or -1")
    (tn, fp), (fn, tp) = confusion_matrix(labels, predictions.astype(np.int64), labels=[-1, 1])
    accuracy = _ratio(tp + tn, len(labels))
    tpr = _ratio(tp, tp + fn)
    fpr = _ratio(fp, fp + tn)
    precision = _ratio(tp, tp + fp)
    f1 = _f1(precision, tpr)
    f1_neg = _f1(_ratio(tn, tn + fn), _ratio(tn, tn + fp))
    return accuracy, tpr, fpr, precision, f1, 0.5 * (f1 + f1_neg)


def average_precision(scores, audit_labels):
    """Step-wise AP over distinct score thresholds; tied scores enter together."""
    scores, labels = _paired(scores, audit_labels, "scores")
    if not (labels == 1).any():
        raise DegenerateInputError("average precision needs at least one positive")
    return float(average_precision_score(labels == 1, scores))


def auroc(scores, audit_labels):
    """Mann-Whitney AUROC; ties count one half."""
    scores, labels = _paired(scores, audit_labels, "scores")
    if len(np.unique(labels)) < 2:
        raise DegenerateInputError("AUROC needs both classes")
    return float(roc_auc_score(labels == 1, scores))


def best_f1(scores, audit_labels):
    scores, labels = _paired(scores, audit_labels, "scores")
    if not (labels == 1).any():
        raise DegenerateInputError("F1 needs at least one positive")
    precision, recall, _ = precision_recall_curve(labels == 1, scores)
    denom = precision + recall
    f1 = np.divide(2.0 * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0)
    return float(f1.max())


def ece(probabilities, audit_labels, bins=cfg.ece_bins):
    """
    Expected calibration error over equal-width right-closed bins (k/M, (k+1)/M]; p = 0 joins the first bin.
    """
    p, labels = _probabilities(probabilities, audit_labels)
    if bins < 1:
        raise ValueError(f"bins must be positive, got {bins}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    which = np.clip(np.searchsorted(edges, p, side="left") - 1, 0, bins - 1)
    hits = (labels == 1).astype(np.float64)
    total = 0.0
    for k in np.unique(which):
        members = which == k
        total += members.sum() * abs(hits[members].mean() - p[members].mean())
    return float(total / len(p))


def brier(probabilities, audit_labels):
    p, labels = _probabilities(probabilities, audit_labels)
    return float(brier_score_loss((labels == 1).astype(np.int64), p, pos_label=1))


def _nll(log_t, logits, labels):
    return float(np.mean(np.logaddexp(0.0, -labels * logits / np.exp(log_t))))


def temperature_scale(logits_validation, labels_validation):
    """
    Temperature T > 0 minimizing the validation NLL of sigmoid(logit / T).

    Golden-section search over log T in temperature_log_bounds, started from the bracket
    around the best point of a coarse grid. A minimum on the edge of the grid returns that
    edge. A single-class validation set gives T = 1 with a warning.
    """
    logits, labels = _paired(logits_validation, labels_validation, "logits")
    if len(np.unique(labels)) < 2:
        warnings.warn("validation set holds a single class; temperature fixed at 1", RuntimeWarning, stacklevel=2)
        return 1.0
    args = (logits, labels.astype(np.float64))
    grid = np.linspace(*cfg.temperature_log_bounds, cfg.temperature_grid_points)
    values = np.array([_nll(log_t, *args) for log_t in grid])
    best = int(np.argmin(values))
    if best in (0, len(grid) - 1) or not values[best] < min(values[best - 1], values[best + 1]):
        return float(np.exp(grid[best]))
    result = minimize_scalar(_nll, bracket=(grid[best - 1], grid[best], grid[best + 1]), args=args,
                             method="golden", tol=cfg.temperature_tol)
    return float(np.exp(result.x))


def spearman(x, y):
    rho, _ = spearmanr(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return float(rho)


def evaluate_scores(test_scores, test_labels, val_scores=None, val_labels=None, bins=cfg.ece_bins, threshold=0.0):
    """
    Full metric report of raw scores on the audit test split.

    Args:
        test_scores (np.ndarray): Scores g(x) on the test split.
        test_labels (np.ndarray): Audit labels of the test split.
        val_scores (np.ndarray | None): Validation scores for temperature scaling; T = 1 when None.
        val_labels (np.ndarray | None): Validation audit labels.
        bins (int): ECE bins.
        threshold (float): Decision threshold on the score.

    Returns:
        MetricReport: Threshold, ranking and calibration metrics; *_ts use the validation temperature.
    """
    scores, labels = _paired(test_scores, test_labels, "scores")
    predictions = np.where(scores > threshold, 1, -1)
    accuracy, tpr, fpr, precision, f1, macro_f1 = confusion_metrics(predictions, labels)
    temperature = 1.0 if val_scores is None else temperature_scale(val_scores, val_labels)
    probs, probs_ts = sigmoid(scores), sigmoid(scores / temperature)
    return MetricReport(
        accuracy=accuracy, tpr=tpr, fpr=fpr, precision=precision, f1=f1, macro_f1=macro_f1,
        ap=average_precision(scores, labels), auroc=auroc(scores, labels),
        ece=ece(probs, labels, bins), brier=brier(probs, labels),
        ece_ts=ece(probs_ts, labels, bins), brier_ts=brier(probs_ts, labels),
        temperature=temperature,
    )
