"""
Task preparation, method dispatch and the job scheduler behind every CLI command.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import core.config as cfg
from baselines.kmeans import KMeansInit, clustering_classifier, kmeans_prior_matched
from baselines.llp import LlpKind, train_llp
from baselines.uu import UuConfig, train_uu
from core.errors import IllConditionedError
from core.losses import LossSpec
from core.rng import derive_seed
from core.types import PriorSource
from datagen.csv_io import ingest_csv_pool, provenance_line
from datagen.gaussian import GaussianTaskSpec, gaussian_task_with_prior, gen_gaussian_pool
from datagen.normalization import FeatureNormalizer
from datagen.pools import resample_pool_to_prior, split_pool, strip_labels
from datagen.tuples import build_tuples
from evaluation.metrics import best_f1, evaluate_scores
from model.trainer import TrainingTrace, train_ntmp, train_stratified, train_supervised
from prior.protocol import estimate_prior_refreshed
from risk.identification import MixConfig
from risk.stratify import stratify_and_solve
from risk.ure import ClampKind

NTMP_CLAMPS = {"ntmp-ure": ClampKind.NONE, "ntmp-relu": ClampKind.RELU, "ntmp-abs": ClampKind.ABS}
UU_CLAMPS = {"uu": ClampKind.NONE, "uucor": ClampKind.ABS}
KMEANS_INITS = {"km": KMeansInit.FORGY, "km++": KMeansInit.PLUS_PLUS}
LLP_KINDS = {"llp-bagce": LlpKind.BAG_CE, "llp-js": LlpKind.JS}


@dataclass
class TaskData:
    """Everything one seed of an experiment trains and evaluates on."""
    tuples: object
    audit: object
    pool: object
    validation: object
    test: object

    @property
    def alpha(self):
        return float(self.tuples.effective_alpha)

    @property
    def pi_true(self):
        return float(self.pool.declared_prior)


def _source_size(spec, prior):
    sizes = [(spec.n, spec.m)] if spec.variable_nm is None else [(n, m) for n, m, _ in spec.variable_nm]
    need_pos = spec.n_tuples * max(m for _, m in sizes)
    need_neg = spec.n_tuples * max(n - m for n, m in sizes)
    return int(math.ceil(1.25 * max(need_pos / prior, need_neg / (1.0 - prior)))) + 50


def _gaussian_task(exp, seed, unlabeled_prior):
    task = exp.task
    spec = GaussianTaskSpec.symmetric(task.dim, task.prior, task.separation, task.cov_scale)
    source = gen_gaussian_pool(spec, _source_size(exp.tuples, task.prior), derive_seed(seed, 1))
    tuples, audit = build_tuples(source, exp.tuples, derive_seed(seed, 2))

    prior = task.prior if unlabeled_prior is None else float(unlabeled_prior)
    target = gaussian_task_with_prior(spec, prior)
    n_unlabeled = task.n_unlabeled or int(math.ceil(tuples.n_instances * cfg.unlabeled_per_tuple_instance))
    pool = strip_labels(gen_gaussian_pool(target, n_unlabeled, derive_seed(seed, 3)), declared_prior=prior)
    validation = gen_gaussian_pool(target, task.n_validation, derive_seed(seed, 4))
    test = gen_gaussian_pool(target, task.n_test, derive_seed(seed, 5))
    return TaskData(tuples, audit, pool, validation, test)


def _csv_task(exp, seed, unlabeled_prior):
    task = exp.task
    full = ingest_csv_pool(task.csv_path, has_labels=True)
    source, unlabeled, validation, test = split_pool(full, task.splits, derive_seed(seed, 1))
    if unlabeled_prior is not None:
        unlabeled = resample_pool_to_prior(unlabeled, float(unlabeled_prior), derive_seed(seed, 3))
    if task.normalize:
        normalizer = FeatureNormalizer(full.dim).fit(unlabeled.features)
        source, unlabeled, validation, test = (normalizer.normalize_pool(p)
                                               for p in (source, unlabeled, validation, test))
    tuples, audit = build_tuples(source, exp.tuples, derive_seed(seed, 2))
    return TaskData(tuples, audit, strip_labels(unlabeled), validation, test)


def prepare_task(exp, seed, unlabeled_prior=None):
    """
    Build the tuples, unlabeled pool and audit splits of one seed.

    Args:
        exp (ExperimentConfig): Experiment.
        seed (int): Data seed; every split uses its own derived seed.
        unlabeled_prior (float | None): Positive share of the unlabeled pool and the audit
            splits; the task prior when None.

    Returns:
        TaskData
    """
    if exp.task.kind == "gaussian":
        return _gaussian_task(exp, seed, unlabeled_prior)
    return _csv_task(exp, seed, unlabeled_prior)


def training_config(exp, seed, clamp_kind=None, tag=None):
    log_dir = None
    if exp.train.log_dir and tag:
        log_dir = os.path.join(exp.train.log_dir, tag)
    return replace(exp.train, seed=derive_seed(seed, 7), log_dir=log_dir,
                   clamp_kind=exp.train.clamp_kind if clamp_kind is None else clamp_kind)


def usable_prior(pi_hat):
    """Keep an estimated prior strictly inside (0, 1)."""
    return float(min(max(pi_hat, cfg.hard_gap), 1.0 - cfg.hard_gap))


def initial_prior(exp, alpha):
    if exp.prior.initial is not None:
        return float(exp.prior.initial)
    if abs(0.5 - alpha) >= cfg.margin_epsilon:
        return 0.5
    return alpha + cfg.margin_epsilon if alpha + cfg.margin_epsilon < 1.0 else alpha - cfg.margin_epsilon


def estimate_task_prior(exp, task, seed, verbose=False):
    """Refreshed class-prior estimate of one seed's unlabeled pool."""
    loss = LossSpec.make(exp.loss)
    tcfg = training_config(exp, seed, ClampKind.ABS)
    estimate, _ = estimate_prior_refreshed(task.tuples, task.pool, loss, tcfg, initial_prior(exp, task.alpha), seed,
                                           fraction=exp.prior.proxy_fraction, bootstrap_b=exp.prior.bootstrap_b,
                                           score_epochs=exp.prior.score_epochs, verbose=verbose)
    return estimate


def fit_method(method, task, prior, exp, seed):
    """
    Train one method with `prior` plugged in wherever the method needs a class prior.

    Returns:
        tuple[callable, TrainingTrace]: Score function on feature matrices and the training trace.
    """
    loss = LossSpec.make(exp.loss)
    audit = (task.validation.features, task.validation.labels)
    tag = f"{method}_seed{seed}"
    alpha = task.alpha
    pool = task.pool.with_prior(prior, PriorSource.ESTIMATED if exp.prior.regime == "estimated" else None)

    if method in NTMP_CLAMPS:
        tcfg = training_config(exp, seed, NTMP_CLAMPS[method], tag)
        if not task.tuples.is_fixed and abs(prior - alpha) < cfg.stratify_tau:
            plan = stratify_and_solve(task.tuples, prior)
            if not plan.is_single:
                scorer, trace = train_stratified(plan, pool, loss, tcfg, audit=audit)
                return scorer.score, trace
        scorer, trace = train_ntmp(task.tuples, pool, MixConfig(prior, alpha), loss, tcfg, audit=audit)
    elif method in UU_CLAMPS:
        tcfg = training_config(exp, seed, UU_CLAMPS[method], tag)
        scorer, trace = train_uu(pool, task.tuples, UuConfig(prior, alpha, UU_CLAMPS[method]), loss, tcfg, audit=audit)
    elif method in KMEANS_INITS:
        assignment = kmeans_prior_matched(pool, KMEANS_INITS[method], prior, derive_seed(seed, 7))
        return assignment.score, TrainingTrace()
    elif method == "km-clf":
        tcfg = training_config(exp, seed, tag=tag)
        seed_km = derive_seed(seed, 7)
        scorer, trace, _ = clustering_classifier(pool, KMeansInit.FORGY, prior, seed_km, tcfg, loss, audit)
    elif method in LLP_KINDS:
        tcfg = training_config(exp, seed, tag=tag)
        scorer, trace = train_llp(task.tuples, LLP_KINDS[method], tcfg, audit=audit)
    elif method == "oracle":
        tcfg = training_config(exp, seed, tag=tag)
        scorer, trace = train_supervised(task.tuples.features, task.audit.labels, loss, tcfg, audit=audit)
    else:
        raise ValueError(f"unknown method {method!r}")
    return scorer.score, trace


def evaluate_method(score_fn, task):
    """MetricReport fields plus Best-F1 on the test split, temperature fitted on validation."""
    test_scores = score_fn(task.test.features)
    report = evaluate_scores(test_scores, task.test.labels, score_fn(task.validation.features),
                             task.validation.labels)
    row = report.to_dict()
    row["best_f1"] = best_f1(test_scores, task.test.labels)
    return row


def train_job(exp, method, seed, prior=None, unlabeled_prior=None, tuples_fn=None):
    """
    One (method, seed) run.

    Args:
        prior (float | None): Prior plugged into training; the pool's true prior when None.
        unlabeled_prior (float | None): Regenerate the unlabeled pool and audit splits at this prior.
        tuples_fn (callable | None): Transform applied to the tuples before training (count corruption).

    Returns:
        tuple[dict, pd.DataFrame]: Metric row (method, seed, prior, alpha, gap and metrics) and the trace table.
    """
    task = prepare_task(exp, seed, unlabeled_prior)
    if tuples_fn is not None:
        task = replace(task, tuples=tuples_fn(task.tuples, seed))
    prior = task.pi_true if prior is None else float(prior)
    score_fn, trace = fit_method(method, task, prior, exp, seed)
    row = {"method": method, "seed": seed, "prior": prior, "alpha": task.alpha, "gap": abs(task.alpha - prior)}
    row.update(evaluate_method(score_fn, task))
    return row, trace.to_frame()


def guarded_job(exp, method, seed, **kwargs):
    """train_job that turns a hard ill-conditioned run into a flagged row of NaN metrics."""
    try:
        row, trace = train_job(exp, method, seed, **kwargs)
        row["ill_conditioned"] = False
        return row, trace
    except IllConditionedError as exc:
        row = {"method": method, "seed": seed, "prior": kwargs.get("prior"), "alpha": math.nan, "gap": exc.gap,
               "ill_conditioned": True}
        return row, TrainingTrace().to_frame()


def sweep_point(exp, method, pi, seed):
    """Metric of one Delta-sweep run (picklable through functools.partial)."""
    row, _ = train_job(exp, method, seed, prior=pi)
    return row[exp.sweep.metric]


class ExperimentRunner:
    def __init__(self, exp, verbose=True):
        """
        Output folder, provenance and job scheduling of one experiment.

        Args:
            exp (ExperimentConfig): Loaded experiment.
            verbose (bool): Print progress lines.
        """
        self.exp = exp
        self.verbose = verbose
        self.out_dir = exp.resolved_output_dir()
        if not os.path.exists(self.out_dir):
            os.makedirs(self.out_dir)
        self.provenance = provenance_line(exp.config_hash, exp.seed)

    def path(self, *parts):
        return os.path.join(self.out_dir, *parts)

    def log(self, message, level="INFO"):
        if self.verbose or level in ("WARNING", "ERROR"):
            print(f"[{level}] {message}")

    def map(self, fn, jobs):
        '''
        Run fn(*args, **kwargs) for every (args, kwargs) job; results come back in job order.
        '''
        if self.exp.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.exp.workers) as pool:
                futures = [pool.submit(fn, *args, **kwargs) for args, kwargs in jobs]
                return [f.result() for f in futures]
        return [fn(*args, **kwargs) for args, kwargs in jobs]

    def training_priors(self):
        """
        Prior plugged into training per seed, plus the estimates when the regime is "estimated".

        Returns:
            tuple[dict, dict]: seed -> prior, seed -> PriorEstimate (empty for the known regime).
        """
        priors, estimates = {}, {}
        for seed in self.exp.seed_list:
            task = prepare_task(self.exp, seed)
            if self.exp.prior.regime == "known":
                priors[seed] = task.pi_true
                continue
            estimate = estimate_task_prior(self.exp, task, seed)
            estimates[seed] = estimate
            priors[seed] = usable_prior(estimate.pi_hat)
            self.log(f"seed {seed}: pi_hat = {estimate.pi_hat:.4f} "
                     f"(CI [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}], true {task.pi_true:.4f})")
        return priors, estimates

    def summary(self, command, lines):
        '''
        Write the text summary of a command next to its CSV artifacts and echo it.
        '''
        filename = self.path(f"{command}_summary.txt")
        with open(filename, "w") as fh:
            fh.write(f"{command} ({self.exp.name}, config {self.exp.config_hash})\n")
            fh.write("\n".join(lines) + "\n")
        for line in lines:
            self.log(line)
        self.log(f"Summary written to {filename}")
