"""
The CLI subcommands. Each is a pure function of the experiment config: reruns write identical bytes.
"""

import functools
import os
from dataclasses import fields
from typing import NamedTuple, Optional

import pandas as pd

from core.errors import ConfigError
from core.rng import derive_seed
from datagen.csv_io import read_csv, save_tuples, write_csv, write_pool_csv
from datagen.tuples import corrupt_counts
from evaluation.metrics import MetricReport
from evaluation.window import annotate_sweep, robustness_window
from prior.sweep import delta_sweep

from .reporting import format_table, mean_curves, significance_table, write_table
from .runner import ExperimentRunner, estimate_task_prior, guarded_job, prepare_task, sweep_point, usable_prior

RUN_COLUMNS = ["method", "seed", "prior", "alpha", "gap", "ill_conditioned"]
METRIC_COLUMNS = RUN_COLUMNS + [f.name for f in fields(MetricReport)] + ["best_f1"]
PERTURB_COLUMNS = ["family", "parameter"] + METRIC_COLUMNS


class TrainReport(NamedTuple):
    metrics: pd.DataFrame
    significance: pd.DataFrame
    note: Optional[str]


def cmd_gen(exp, verbose=True):
    """
    Write the unlabeled pool, the tuples (JSON lines + instance CSV), the audit sidecar and
    the labeled validation / test splits of seed exp.seed.

    Returns:
        dict: Artifact name -> path.
    """
    runner = ExperimentRunner(exp, verbose)
    task = prepare_task(exp, exp.seed)
    paths = {name: runner.path("data", name) for name in
             ("unlabeled.csv", "tuples.jsonl", "instances.csv", "audit.csv", "validation.csv", "test.csv")}

    write_pool_csv(task.pool, paths["unlabeled.csv"], runner.provenance)
    save_tuples(task.tuples, task.audit, paths["tuples.jsonl"], paths["instances.csv"], paths["audit.csv"],
                runner.provenance)
    write_pool_csv(task.validation, paths["validation.csv"], runner.provenance)
    write_pool_csv(task.test, paths["test.csv"], runner.provenance)

    runner.summary("gen", [
        f"{len(task.tuples)} tuples, {task.tuples.n_instances} tuple instances, alpha = {task.alpha:.4f}",
        f"{len(task.pool)} unlabeled instances with prior {task.pi_true:.4f}",
        f"{len(task.validation)} validation / {len(task.test)} test instances",
    ])
    return paths


def _metrics_frame(rows):
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def cmd_train(exp, verbose=True):
    """
    Train every method on every seed and compare them against ntmp-ure.

    Writes metrics.csv (one row per method and seed, with the operating gap |alpha - prior|),
    traces/<method>_seed<k>.csv, significance.csv and, for the estimated regime, prior_estimates.csv.

    Returns:
        TrainReport
    """
    runner = ExperimentRunner(exp, verbose)
    priors, estimates = runner.training_priors()
    jobs = [((exp, method, seed), {"prior": priors[seed]}) for method in exp.methods for seed in exp.seed_list]
    runner.log(f"Running {len(jobs)} jobs ({len(exp.methods)} methods x {exp.seeds} seeds)")
    results = runner.map(guarded_job, jobs)

    rows = []
    for (row, trace), ((_, method, seed), _) in zip(results, jobs):
        write_csv(trace, runner.path("traces", f"{method}_seed{seed}.csv"), runner.provenance)
        if row["ill_conditioned"]:
            runner.log(f"{method} seed {seed}: ill-conditioned (gap {row['gap']:.2e})", "WARNING")
        rows.append(row)
    metrics = _metrics_frame(rows)
    write_csv(metrics, runner.path("metrics.csv"), runner.provenance)

    if estimates:
        frame = pd.DataFrame([{"seed": s, "pi_hat": e.pi_hat, "ci_low": e.ci_low, "ci_high": e.ci_high,
                               "np_lower_bound": e.np_lower_bound} for s, e in estimates.items()])
        write_csv(frame, runner.path("prior_estimates.csv"), runner.provenance)

    table, note = significance_table(metrics)
    write_table(table, note, runner.path("significance.csv"), runner.provenance)
    runner.summary("train", format_table(table, note))
    return TrainReport(metrics, table, note)


def cmd_estimate_prior(exp, verbose=True):
    """Run the refreshed class-prior protocol on seed exp.seed and write prior_estimate.json."""
    runner = ExperimentRunner(exp, verbose)
    task = prepare_task(exp, exp.seed)
    estimate = estimate_task_prior(exp, task, exp.seed, verbose)
    with open(runner.path("prior_estimate.json"), "w") as fh:
        fh.write(estimate.to_json() + "\n")
    runner.summary("estimate-prior", [
        f"pi_hat = {estimate.pi_hat:.4f} (CI [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}])",
        f"NP lower bound = {estimate.np_lower_bound:.4f} (band [{estimate.lb_ci[0]:.4f}, {estimate.lb_ci[1]:.4f}])",
        f"declared prior of the pool = {task.pi_true:.4f}, alpha = {task.alpha:.4f}",
    ])
    return estimate


def cmd_sweep(exp, verbose=True):
    """
    Delta-sweep of exp.sweep.method around the training prior of seed exp.seed.

    Writes sweep_raw.csv (per seed), sweep.csv (per grid prior with the robust / in_window /
    delta_crit flags) and window.json.

    Returns:
        tuple[SweepResult, RobustWindow]
    """
    runner = ExperimentRunner(exp, verbose)
    task = prepare_task(exp, exp.seed)
    center = task.pi_true
    if exp.prior.regime == "estimated":
        center = usable_prior(estimate_task_prior(exp, task, exp.seed).pi_hat)
    runner.log(f"Sweeping {exp.sweep.method} around pi = {center:.4f} (alpha = {task.alpha:.4f})")

    run_point = functools.partial(sweep_point, exp, exp.sweep.method)
    result = delta_sweep(run_point, center, exp.sweep.deltas, exp.seed_list, alpha=task.alpha,
                         metric_name=exp.sweep.metric, bootstrap_b=exp.sweep.bootstrap_b, seed=exp.seed,
                         workers=exp.workers, verbose=verbose)
    result.to_csv(runner.path("sweep_raw.csv"), runner.provenance)

    window = robustness_window(result, exp.sweep.epsilon, exp.sweep.w_star)
    write_csv(annotate_sweep(result, window), runner.path("sweep.csv"), runner.provenance)
    window.save(runner.path("window.json"))
    crit = "none" if window.delta_crit is None else f"{window.delta_crit:.2f}"
    runner.summary("sweep", [f"robust window [{window.delta_min:.2f}, {window.delta_max:.2f}], Delta_crit {crit}"])
    return result, window


def corrupt_tuples(flip_prob, tuples, seed):
    return corrupt_counts(tuples, flip_prob, derive_seed(seed, 8))


def cmd_perturb(exp, verbose=True):
    """
    The three perturbation families for exp.perturb.method:

    prior: the training prior scaled by (1 + r) for every r in prior_noise;
    count_flip: declared counts flipped by +/-1 with every probability in flip_probs;
    pi_band: the unlabeled pool regenerated at pi = alpha + d for every d in pi_band.

    Writes perturb.csv (per seed) and perturb_curves.csv (seed means of COR / TPR / FPR / F1).

    Returns:
        pd.DataFrame: The curves.
    """
    runner = ExperimentRunner(exp, verbose)
    method, spec = exp.perturb.method, exp.perturb
    priors, _ = runner.training_priors()
    alpha = prepare_task(exp, exp.seed).alpha

    labels, jobs = [], []
    for r in spec.prior_noise:
        for seed in exp.seed_list:
            labels.append(("prior", float(r)))
            jobs.append(((exp, method, seed), {"prior": usable_prior(priors[seed] * (1.0 + r))}))
    for p in spec.flip_probs:
        for seed in exp.seed_list:
            labels.append(("count_flip", float(p)))
            jobs.append(((exp, method, seed), {"prior": priors[seed],
                                               "tuples_fn": functools.partial(corrupt_tuples, float(p))}))
    for d in spec.pi_band:
        pi = alpha + float(d)
        if not 0.0 < pi < 1.0:
            runner.log(f"pi_band offset {d:+.2f} leaves (0, 1); skipped", "WARNING")
            continue
        for seed in exp.seed_list:
            labels.append(("pi_band", float(d)))
            jobs.append(((exp, method, seed), {"prior": pi, "unlabeled_prior": pi}))

    runner.log(f"Running {len(jobs)} perturbation jobs for {method}")
    results = runner.map(guarded_job, jobs)
    rows = [dict(row, family=family, parameter=parameter) for (family, parameter), (row, _) in zip(labels, results)]
    frame = pd.DataFrame(rows, columns=PERTURB_COLUMNS)
    write_csv(frame, runner.path("perturb.csv"), runner.provenance)

    curves = mean_curves(frame)
    write_csv(curves, runner.path("perturb_curves.csv"), runner.provenance)
    lines = [f"{family}: F1 from {sub['f1'].min():.4f} to {sub['f1'].max():.4f}"
             for family, sub in curves.groupby("family", sort=False)]
    runner.summary("perturb", lines)
    return curves


def cmd_report(exp, verbose=True):
    """Rebuild significance.csv from the metrics.csv of an earlier train run."""
    runner = ExperimentRunner(exp, verbose)
    path = runner.path("metrics.csv")
    if not os.path.exists(path):
        raise ConfigError(f"no metrics.csv in {runner.out_dir}; run the train command first")
    metrics = read_csv(path)
    table, note = significance_table(metrics)
    write_table(table, note, runner.path("significance.csv"), runner.provenance)
    runner.summary("report", format_table(table, note))
    return table, note
