"""
Experiment configuration: a YAML file mapped onto typed dataclasses.

Unknown keys anywhere in the file are a ConfigError; so is any value a dataclass
rejects. The output root can be redirected with the NTMP_OUTPUT_ROOT environment variable.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field, fields
from typing import Optional

import yaml

import core.config as cfg
from core.errors import ConfigError
from core.losses import LossKind
from datagen.tuples import TupleBuildSpec
from evaluation.metrics import MetricReport
from model.trainer import TrainConfig

METHODS = ("ntmp-ure", "ntmp-abs", "ntmp-relu", "uu", "uucor", "km", "km++", "km-clf", "llp-bagce", "llp-js",
           "oracle")


@dataclass
class TaskConfig:
    kind: str = "gaussian"                  # "gaussian" or "csv"
    dim: int = cfg.default_dim
    prior: float = 0.5
    separation: float = 1.0
    cov_scale: float = cfg.default_cov_scale
    n_unlabeled: Optional[int] = None       # None: n_T * n * unlabeled_per_tuple_instance
    n_validation: int = 2000
    n_test: int = 5000
    csv_path: Optional[str] = None          # labeled CSV (audit labels) for kind "csv"
    splits: tuple = (0.5, 0.3, 0.1, 0.1)    # tuple source / unlabeled / validation / test shares of the CSV
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in ("gaussian", "csv"):
            raise ValueError(f"task kind must be 'gaussian' or 'csv', got {self.kind!r}")
        if self.kind == "csv" and not self.csv_path:
            raise ValueError("a csv task needs csv_path")
        if not 0.0 < self.prior < 1.0:
            raise ValueError(f"task prior must lie in (0, 1), got {self.prior}")
        self.splits = tuple(float(s) for s in self.splits)
        if len(self.splits) != 4 or sum(self.splits) > 1.0 + 1e-12:
            raise ValueError("splits must be four shares summing to at most 1")


@dataclass
class PriorConfig:
    regime: str = "known"                   # "known" or "estimated"
    initial: Optional[float] = None         # starting prior of the estimation protocol
    bootstrap_b: int = cfg.prior_bootstrap_b
    score_epochs: int = cfg.score_model_epochs
    proxy_fraction: float = cfg.proxy_fraction

    def __post_init__(self):
        if self.regime not in ("known", "estimated"):
            raise ValueError(f"prior regime must be 'known' or 'estimated', got {self.regime!r}")


@dataclass
class SweepConfig:
    method: str = "ntmp-abs"
    deltas: Optional[list] = None           # None: -0.30 .. 0.30 in steps of 0.02
    metric: str = "ap"
    epsilon: float = cfg.window_epsilon
    w_star: float = cfg.window_w_star
    bootstrap_b: int = cfg.metric_bootstrap_b

    def __post_init__(self):
        metrics = [f.name for f in fields(MetricReport)] + ["best_f1"]
        if self.metric not in metrics:
            raise ValueError(f"unknown sweep metric {self.metric!r}; choose from {metrics}")
        if self.deltas is not None:
            self.deltas = [float(d) for d in self.deltas]
            if not any(abs(d) < 1e-12 for d in self.deltas):
                raise ValueError("sweep deltas must include 0 (the center run)")


@dataclass
class PerturbConfig:
    method: str = "ntmp-abs"
    prior_noise: list = field(default_factory=lambda: [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3])
    flip_probs: list = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2, 0.3])
    pi_band: list = field(default_factory=lambda: [-0.1, -0.05, -0.02, 0.0, 0.02, 0.05, 0.1])


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    seeds: int = cfg.sweep_seeds
    workers: int = 1
    output_dir: Optional[str] = None
    loss: str = cfg.default_loss
    methods: list = field(default_factory=lambda: ["ntmp-ure", "ntmp-abs"])
    task: TaskConfig = field(default_factory=TaskConfig)
    tuples: TupleBuildSpec = field(default_factory=TupleBuildSpec)
    prior: PriorConfig = field(default_factory=PriorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    config_hash: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("the method list is empty")
        unknown = [m for m in self.methods if m not in METHODS]
        unknown += [m for m in (self.sweep.method, self.perturb.method) if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if self.seeds < 1:
            raise ValueError(f"seeds must be at least 1, got {self.seeds}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        LossKind(self.loss)

    @property
    def seed_list(self):
        return [self.seed + k for k in range(self.seeds)]

    def resolved_output_dir(self):
        root = os.environ.get(cfg.output_root_env)
        if root:
            return os.path.join(root, self.name)
        return self.output_dir or os.path.join("runs", self.name)


_SECTIONS = {"task": TaskConfig, "tuples": TupleBuildSpec, "prior": PriorConfig, "train": TrainConfig,
             "sweep": SweepConfig, "perturb": PerturbConfig}


def _build(cls, values, where):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(values).__name__}")
    known = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def config_hash(raw):
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def experiment_from_dict(raw):
    """Build an ExperimentConfig from a parsed YAML mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("the experiment config must be a mapping")
    raw = dict(raw)
    top = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            if key == "tuples" and isinstance(value, dict) and value.get("variable_nm") is not None:
                value = dict(value, variable_nm=tuple(tuple(c) for c in value["variable_nm"]))
            top[key] = _build(_SECTIONS[key], value, key)
        else:
            top[key] = value
    top["config_hash"] = config_hash(raw)
    if "config_hash" in raw:
        raise ConfigError("unknown key(s) in experiment: config_hash")
    return _build(ExperimentConfig, top, "experiment")


def load_experiment(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return experiment_from_dict(raw or {})
