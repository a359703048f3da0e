"""
Delta-sweep: retrain at every prior of a symmetric grid around pi_hat and record the
primary metric over several seeds.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

import core.config as cfg
from core.errors import IllConditionedError
from core.rng import derive_seed
from datagen.csv_io import read_csv, write_csv
from evaluation.statistics import bootstrap_ci

RAW_COLUMNS = ["pi", "delta", "seed", "metric", "metric_name"]
AGGREGATE_COLUMNS = ["pi", "delta", "mean", "std", "ci_low", "ci_high", "ill_conditioned"]


def default_deltas(step=cfg.sweep_step, half_width=cfg.sweep_half_width):
    """{-0.30, -0.28, ..., +0.30} rounded to the step's decimals."""
    n = int(round(half_width / step))
    return np.round(np.arange(-n, n + 1) * step, 10)


def sweep_grid(pi_center, deltas=None):
    """(pi, delta) pairs with pi = pi_center + delta strictly inside (0, 1)."""
    deltas = default_deltas() if deltas is None else np.asarray(deltas, dtype=np.float64)
    grid = [(float(pi_center) + float(d), float(d)) for d in deltas]
    grid = [(pi, d) for pi, d in grid if 0.0 < pi < 1.0]
    if not grid:
        raise ValueError(f"no grid prior around {pi_center} lies inside (0, 1)")
    return grid


@dataclass
class SweepResult:
    pi_center: float
    metric_name: str = "ap"
    rows: list = field(default_factory=list)
    bootstrap_b: int = cfg.metric_bootstrap_b
    level: float = cfg.ci_level
    seed: int = 0
    _aggregate: Optional[pd.DataFrame] = field(default=None, repr=False)

    def record(self, pi, delta, seed, metric):
        self.rows.append({"pi": pi, "delta": delta, "seed": seed, "metric": metric, "metric_name": self.metric_name})
        self._aggregate = None

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=RAW_COLUMNS)

    def aggregate(self):
        """
        One row per grid prior: mean, std, percentile-bootstrap CI of the metric over seeds.

        A grid point whose every run was ill-conditioned has NaN statistics and the flag set.
        """
        if self._aggregate is not None:
            return self._aggregate.copy()
        frame = self.to_frame()
        out = []
        for k, ((pi, delta), group) in enumerate(frame.groupby(["pi", "delta"], sort=True)):
            values = group["metric"].to_numpy(dtype=np.float64)
            finite = values[np.isfinite(values)]
            ill = not finite.size
            mean = float(finite.mean()) if finite.size else math.nan
            std = float(finite.std(ddof=1)) if finite.size > 1 else (0.0 if finite.size else math.nan)
            if finite.size > 1:
                low, high = bootstrap_ci(finite, self.bootstrap_b, self.level, derive_seed(self.seed, k))
            else:
                low = high = mean
            out.append({"pi": pi, "delta": delta, "mean": mean, "std": std, "ci_low": low, "ci_high": high,
                        "ill_conditioned": ill})
        self._aggregate = pd.DataFrame(out, columns=AGGREGATE_COLUMNS)
        return self._aggregate.copy()

    def to_csv(self, path, provenance=None):
        write_csv(self.to_frame(), path, provenance)

    def aggregate_to_csv(self, path, provenance=None, extra=None):
        frame = self.aggregate()
        if extra is not None:
            frame = frame.join(extra)
        write_csv(frame, path, provenance)

    @classmethod
    def from_aggregate_csv(cls, path, metric_name="ap"):
        frame = read_csv(path)
        missing = [c for c in AGGREGATE_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"{path} lacks the aggregate columns {missing}")
        frame = frame[AGGREGATE_COLUMNS].copy()
        frame["ill_conditioned"] = frame["ill_conditioned"].astype(str).str.lower().isin(["true", "1"])
        nearest = frame.loc[frame["delta"].abs().idxmin()]
        center = nearest["pi"] - nearest["delta"]
        return cls(pi_center=float(center), metric_name=metric_name, _aggregate=frame)


def _run(run_point, pi, seed):
    try:
        return float(run_point(pi, seed))
    except IllConditionedError:
        return math.nan


def delta_sweep(run_point, pi_center, deltas=None, seeds=cfg.sweep_seeds, alpha=None, metric_name="ap",
                bootstrap_b=cfg.metric_bootstrap_b, seed=0, workers=1, verbose=False):
    """
    Run the Delta-sweep.

    Args:
        run_point (callable): run_point(pi, seed) -> metric value of one training run with pi plugged
            into the risk; raising IllConditionedError marks the run. Must be picklable when workers > 1.
        pi_center (float): Center of the grid (usually pi_hat).
        deltas (sequence | None): Offsets; default_deltas() when None.
        seeds (int | sequence): Number of seeds (0 .. S-1) or the explicit seed list. Every grid
            point uses the same seeds, so the delta = 0 runs are the plain runs at pi_center.
        alpha (float | None): Tuple mixing weight; grid points within the hard gap are flagged without running.
        metric_name (str): Name recorded with the metric.
        bootstrap_b (int): Resamples of the per-point CI.
        seed (int): Seed of the bootstrap.
        workers (int): Parallel processes; 1 runs inline.
        verbose (bool): Print one line per grid point.

    Returns:
        SweepResult: Raw per-seed rows; aggregate() adds the per-point statistics.
    """
    seed_list = list(range(seeds)) if isinstance(seeds, (int, np.integer)) else [int(s) for s in seeds]
    if not seed_list:
        raise ValueError("the sweep needs at least one seed")
    grid = sweep_grid(pi_center, deltas)
    result = SweepResult(float(pi_center), metric_name, bootstrap_b=bootstrap_b, seed=seed)

    jobs = []
    for pi, delta in grid:
        degenerate = alpha is not None and abs(pi - float(alpha)) < cfg.hard_gap
        jobs.extend((pi, delta, s, degenerate) for s in seed_list)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [None if degenerate else pool.submit(_run, run_point, pi, s) for pi, _, s, degenerate in jobs]
            values = [math.nan if f is None else f.result() for f in futures]
    else:
        values = [math.nan if degenerate else _run(run_point, pi, s) for pi, _, s, degenerate in jobs]

    for (pi, delta, s, _), value in zip(jobs, values):
        result.record(pi, delta, s, value)
    if verbose:
        for row in result.aggregate().itertuples():
            flag = " [ill-conditioned]" if row.ill_conditioned else ""
            print(f"[INFO] pi = {row.pi:.3f} (delta {row.delta:+.2f}): {metric_name} {row.mean:.4f}{flag}")
    return result
