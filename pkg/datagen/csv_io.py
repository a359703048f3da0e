"""
CSV and JSON-lines formats for pools, tuple datasets and every tabular artifact.

Every CSV written here may start with a provenance comment line
("# config_hash=<hash> seed=<seed>"); readers skip it.
"""

import json
import os
import re

import numpy as np
import pandas as pd

from core.errors import CsvParseError
from core.types import AuditSidecar, LabeledPool, PriorSource, TupleDataset, UnlabeledPool

_LINE = re.compile(r"line (\d+)")


def provenance_line(config_hash, seed):
    return f"# config_hash={config_hash} seed={seed}\n"


def write_csv(frame, path, provenance=None):
    """
    Write a DataFrame with an optional leading provenance comment.

    Args:
        frame (pd.DataFrame): Table to write, header included.
        path (str): Destination file.
        provenance (str | None): Comment line from provenance_line().
    """
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if provenance:
            fh.write(provenance)
        frame.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")


def read_csv(path):
    return pd.read_csv(path, comment="#")


def _is_number(cell):
    try:
        float(cell)
        return True
    except (TypeError, ValueError):
        return False


def _read_raw(path):
    try:
        raw = pd.read_csv(path, header=None, dtype=str, comment="#", keep_default_na=False,
                          skip_blank_lines=True, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise CsvParseError(None, "no rows")
    except pd.errors.ParserError as exc:
        found = _LINE.search(str(exc))
        raise CsvParseError(int(found.group(1)) if found else None, f"ragged row ({exc})")
    return raw


def _parse_labels(column, first_row):
    values = pd.to_numeric(column, errors="coerce")
    bad = ~np.isin(values, (-1.0, 0.0, 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise CsvParseError(first_row + i, f"unknown label symbol {column.iloc[i]!r}")
    values = values.to_numpy()
    if (values == 0).any() and (values == -1).any():
        i = int(np.flatnonzero(values == 0)[0])
        raise CsvParseError(first_row + i, "labels mix 0 with -1; use {+1, -1} or {1, 0}")
    # {0, 1} files are remapped to {-1, +1}
    return np.where(values == 1, 1, -1)


def ingest_csv_pool(path, has_labels, declared_prior=None, prior_source=PriorSource.KNOWN_BY_CONSTRUCTION):
    """
    Parse a comma-separated feature file into a pool.

    Args:
        path (str): CSV path; an optional header is detected from the first row.
        has_labels (bool): Whether the last column (or the column named "label") holds labels.
        declared_prior (float | None): Required when has_labels is False.
        prior_source (PriorSource): Recorded on the unlabeled pool.

    Returns:
        LabeledPool | UnlabeledPool: Parsed pool, d inferred from the column count.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    raw = _read_raw(path)
    header = None
    if len(raw) and not all(_is_number(c) for c in raw.iloc[0]):
        header = [str(c).strip() for c in raw.iloc[0]]
        raw = raw.iloc[1:].reset_index(drop=True)
    first_row = 2 if header else 1
    if not len(raw):
        raise CsvParseError(None, "no rows")
    ragged = (raw == "").any(axis=1) | raw.isna().any(axis=1)
    if ragged.any():
        raise CsvParseError(first_row + int(np.flatnonzero(ragged.to_numpy())[0]), "ragged row")

    label_col = None
    if has_labels:
        label_col = header.index("label") if header and "label" in header else raw.shape[1] - 1
    feature_cols = [c for c in range(raw.shape[1]) if c != label_col]
    if not feature_cols:
        raise CsvParseError(None, "no feature columns")

    features = raw.iloc[:, feature_cols].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(features).all(axis=1)
    if bad.any():
        raise CsvParseError(first_row + int(np.flatnonzero(bad)[0]), "non-numeric feature value")

    if has_labels:
        return LabeledPool(features, _parse_labels(raw.iloc[:, label_col], first_row))
    if declared_prior is None:
        raise ValueError("declared_prior is required for an unlabeled pool")
    return UnlabeledPool(features, declared_prior, prior_source)


def pool_frame(features, labels=None):
    frame = pd.DataFrame(features, columns=[f"x{j}" for j in range(features.shape[1])])
    if labels is not None:
        frame["label"] = np.asarray(labels, dtype=np.int64)
    return frame


def write_pool_csv(pool, path, provenance=None):
    labels = pool.labels if isinstance(pool, LabeledPool) else None
    write_csv(pool_frame(pool.features, labels), path, provenance)


def save_tuples(dataset, sidecar, tuples_path, instances_path, audit_path=None, provenance=None):
    """
    Serialize a tuple dataset.

    Writes one JSON object {n, m, instance_indices} per tuple, the instances once as a
    label-free CSV indexed by row, and optionally the audit labels as a separate CSV.
    """
    rows = np.arange(dataset.n_instances)
    write_csv(pool_frame(dataset.features), instances_path, provenance)
    folder = os.path.dirname(tuples_path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(tuples_path, "w") as fh:
        for t in range(len(dataset)):
            lo, hi = dataset.offsets[t], dataset.offsets[t + 1]
            record = {"n": int(dataset.sizes[t]), "m": int(dataset.counts[t]),
                      "instance_indices": rows[lo:hi].tolist()}
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if audit_path is not None and sidecar is not None:
        audit = pd.DataFrame({"tuple": dataset.tuple_ids, "instance": rows, "label": sidecar.labels})
        write_csv(audit, audit_path, provenance)


def load_tuples(tuples_path, instances_path):
    """Inverse of save_tuples (without the audit labels)."""
    instances = read_csv(instances_path).to_numpy(dtype=np.float64)
    sizes, counts, index = [], [], []
    with open(tuples_path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                n, m, members = int(record["n"]), int(record["m"]), record["instance_indices"]
            except (ValueError, KeyError, TypeError) as exc:
                raise CsvParseError(line_no, f"malformed tuple record ({exc})")
            if len(members) != n:
                raise CsvParseError(line_no, f"tuple declares n = {n} but lists {len(members)} instances")
            sizes.append(n)
            counts.append(m)
            index.extend(members)
    if not sizes:
        raise CsvParseError(None, "no rows")
    index = np.asarray(index, dtype=np.int64)
    return TupleDataset(instances[index], sizes, counts, index)


def load_audit(audit_path):
    return AuditSidecar(read_csv(audit_path)["label"].to_numpy(dtype=np.int64))
