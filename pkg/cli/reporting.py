"""
Comparison tables: per-method means, Holm-adjusted Wilcoxon p-values and Cliff's delta
against the reference method, plus mean curves of the perturbation runs.
"""

import warnings

import numpy as np
import pandas as pd

from datagen.csv_io import write_csv
from evaluation.statistics import cliffs_delta, cliffs_magnitude, holm_adjust, wilcoxon_signed_rank

REFERENCE_METHOD = "ntmp-ure"
TABLE_COLUMNS = ["method", "n_seeds", "AP", "AP_std", "AUROC", "AUROC_std", "ECE_TS", "Brier_TS", "Best_F1",
                 "p_Holm", "Cliff's δ", "magnitude"]
CURVE_METRICS = {"accuracy": "cor", "tpr": "tpr", "fpr": "fpr", "f1": "f1"}


def significance_table(metrics, reference=REFERENCE_METHOD, primary="ap"):
    """
    Comparison table of a train run.

    Args:
        metrics (pd.DataFrame): One row per (method, seed) with the MetricReport columns.
        reference (str): Method every other method is tested against; the first listed
            method when absent.
        primary (str): Metric column the paired tests run on.

    Returns:
        tuple[pd.DataFrame, str | None]: The table (columns TABLE_COLUMNS, methods in listed
        order) and a note when there is nothing to compare.
    """
    frame = metrics[~metrics.get("ill_conditioned", pd.Series(False, index=metrics.index)).astype(bool)]
    methods = list(dict.fromkeys(frame["method"]))
    if len(methods) < 2:
        return pd.DataFrame(columns=TABLE_COLUMNS), "single method: nothing to compare"
    if reference not in methods:
        reference = methods[0]
    ours = frame[frame["method"] == reference].set_index("seed")[primary]

    rows, raw_p = [], []
    for method in methods:
        sub = frame[frame["method"] == method]
        rows.append({
            "method": method, "n_seeds": len(sub),
            "AP": sub["ap"].mean(), "AP_std": sub["ap"].std(ddof=1) if len(sub) > 1 else np.nan,
            "AUROC": sub["auroc"].mean(), "AUROC_std": sub["auroc"].std(ddof=1) if len(sub) > 1 else np.nan,
            "ECE_TS": sub["ece_ts"].mean(), "Brier_TS": sub["brier_ts"].mean(),
            "Best_F1": sub["best_f1"].mean() if "best_f1" in sub else np.nan,
            "p_Holm": np.nan, "Cliff's δ": np.nan, "magnitude": "",
        })
        if method == reference:
            continue
        paired = pd.concat([ours.rename("ours"), sub.set_index("seed")[primary].rename("other")], axis=1,
                           join="inner")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            raw_p.append((len(rows) - 1, wilcoxon_signed_rank(paired["ours"], paired["other"])))
        delta = cliffs_delta(paired["ours"], paired["other"])
        rows[-1]["Cliff's δ"] = delta
        rows[-1]["magnitude"] = cliffs_magnitude(delta)

    adjusted = holm_adjust([p for _, p in raw_p])
    for (i, _), p in zip(raw_p, adjusted):
        rows[i]["p_Holm"] = float(p)
    note = f"reference method: {reference}; Cliff's δ > 0 favors the reference"
    return pd.DataFrame(rows, columns=TABLE_COLUMNS), note


def write_table(frame, note, path, provenance=None):
    header = provenance or ""
    if note:
        header += f"# note: {note}\n"
    write_csv(frame, path, header or None)


def format_table(frame, note=None):
    """Lines for the console and the text summary."""
    if frame.empty:
        return [note or "empty table"]
    lines = frame.to_string(index=False, float_format=lambda v: f"{v:.4f}").splitlines()
    return lines + ([note] if note else [])


def mean_curves(frame, keys=("family", "parameter")):
    """Seed-averaged COR / TPR / FPR / F1 curves of the perturbation runs; ill-conditioned runs are flagged."""
    grouped = frame.groupby(list(keys), sort=False)
    curves = grouped[list(CURVE_METRICS)].mean().rename(columns=CURVE_METRICS)
    curves["n_seeds"] = grouped.size()
    curves["ill_conditioned"] = grouped["ill_conditioned"].any()
    return curves.reset_index()
