"""Experiment configuration, orchestration and result files.

A configuration is a YAML mapping. Every key is optional; the dataset picks
the network presets and the default budget. Example::

    learner: siameseduo
    dataset: sea
    variant: abrupt
    budget: 0.01
    seeds: [0, 1, 2, 3, 4]
    augmentation: {counts: [3, 3, 3], beta1: 0.1}
"""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml
from sklearn.preprocessing import MinMaxScaler

from .active_learning import BudgetTracker
from .augmentation import AugmentConfig
from .evaluation import FadingGmean, RunLog, SlidingPmauc, aggregate_runs
from .exceptions import ConfigParseError, ConfigurationError, ExperimentError
from .learners import LEARNERS, Oracle, make_learner
from .streams import N_CLASSES, RING_WIDTH, VARIANTS, StreamSpec, make_stream

CSV_COLUMNS = ("t", "learner", "dataset", "seed", "predicted", "actual", "queried",
               "gmean", "pmauc", "budget_spent")
CHECKPOINTS = (8000, 12000, 18000)
SYNTHETIC = tuple(N_CLASSES)

# learning rate, first-network layers, second-network layers, budget
DATASET_PRESETS = {
    "sea": (0.01, (32, 32), (16,), 0.01),
    "circles": (0.01, (32, 32), (16,), 0.01),
    "blobs": (0.01, (32, 32), (16,), 0.01),
    "keystroke": (0.001, (128, 64), (32,), 0.10),
    "digits": (0.001, (128, 64), (16,), 0.01),
    "starlight": (0.001, (128, 64), (16,), 0.01),
    "uwave": (0.001, (512, 128), (16,), 0.05),
    "emg": (0.001, (512, 512), (16,), 0.10),
    "file": (0.001, (128, 64), (16,), 0.01),
}


@dataclass
class ActiveLearningConfig:
    step: float = 0.01
    std: float = 1.0
    window: int = 300


@dataclass
class EvaluationConfig:
    alpha: float = 0.99
    window: int = 500
    every: int = 1
    checkpoints: tuple = CHECKPOINTS
    symmetric_pmauc: bool = False


@dataclass
class RunConfig:
    learner: str = "siameseduo"
    dataset: str = "sea"
    variant: str = "original"
    path: str = None
    header: bool = None
    length: int = 18000
    drift_times: tuple = None
    imbalance_ratio: float = None
    majority_class: int = 1
    blob_sigma: float = 1.0
    ring_width: float = RING_WIDTH
    n_seed_per_class: int = 10
    scale: bool = False
    scale_range: tuple = (0.0, 1.0)
    budget: float = None
    memory: int = 10
    hidden: tuple = None
    learning_rate: float = None
    s2_hidden: tuple = None
    s2_learning_rate: float = 0.001
    l2: float = 1e-4
    batch_size: int = 64
    epochs: int = 1
    max_augmented_positives: int = 4500
    active_learning: ActiveLearningConfig = field(default_factory=ActiveLearningConfig)
    augmentation: AugmentConfig = field(default_factory=AugmentConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    seeds: tuple = (0, 1, 2, 3, 4)
    n_jobs: int = 1
    out: str = "results"

    def stream_spec(self, seed):
        source = self.dataset if self.dataset in SYNTHETIC else "file"
        spec = dict(source=source, length=self.length, seed=seed,
                    majority_class=self.majority_class, blob_sigma=self.blob_sigma,
                    ring_width=self.ring_width,
                    n_seed_per_class=self.n_seed_per_class, name=self.dataset)
        if source == "file":
            return StreamSpec(**spec, path=self.path, header=self.header)
        spec.update(VARIANTS[self.variant])
        if self.length is not None:
            # preset drift times past a shortened stream are simply never reached
            spec["drift_times"] = tuple(d for d in spec["drift_times"] if d < self.length)
        if self.drift_times is not None:
            spec["drift_times"] = tuple(self.drift_times)
        if self.imbalance_ratio is not None:
            spec["imbalance_ratio"] = self.imbalance_ratio
        return StreamSpec(**spec)

    def learner_params(self, random_state):
        params = dict(budget=self.budget, hidden_layers=tuple(self.hidden),
                      learning_rate=self.learning_rate, l2_rate=self.l2,
                      batch_size=self.batch_size, threshold_step=self.active_learning.step,
                      threshold_std=self.active_learning.std,
                      budget_window=self.active_learning.window,
                      random_state=random_state)
        if self.learner != "baseline":
            params["memory_size"] = self.memory
        if self.learner == "siameseduo":
            aug = self.augmentation
            params.update(s2_hidden_layers=tuple(self.s2_hidden),
                          s2_learning_rate=self.s2_learning_rate,
                          augment_counts=aug.counts, beta1=aug.beta1, beta2=aug.beta2,
                          beta3=aug.beta3, distance=aug.distance,
                          max_augmented_positives=self.max_augmented_positives)
        return params


_NESTED = {"active_learning": ActiveLearningConfig, "augmentation": AugmentConfig,
           "evaluation": EvaluationConfig}
_TUPLES = {"hidden", "s2_hidden", "drift_times", "seeds", "scale_range"}
_PRESET_KEYS = {"learning_rate", "hidden", "s2_hidden", "budget", "dataset"}


def _build_nested(name, cls, value):
    if value is None:
        return cls()
    if not isinstance(value, dict):
        raise ConfigParseError(name, "expected a mapping")
    known = {f.name for f in fields(cls)}
    for key in value:
        if key not in known:
            raise ConfigParseError(f"{name}.{key}", "unknown key")
    try:
        return cls(**value)
    except (TypeError, ValueError) as err:
        raise ConfigParseError(name, str(err)) from None


def _check_range(key, value, ok, message):
    if not ok(value):
        raise ConfigParseError(key, f"{message} (got {value!r})")


def resolve_config(values):
    """Build a :class:`RunConfig` from a mapping, filling dataset presets."""
    values = dict(values or {})
    known = {f.name for f in fields(RunConfig)}
    for key in values:
        if key not in known:
            raise ConfigParseError(key, "unknown key")
    # null means "use the preset" for preset-filled keys only
    values = {k: v for k, v in values.items() if v is not None or k not in _PRESET_KEYS}
    dataset = values.get("dataset", "sea")
    if dataset not in DATASET_PRESETS:
        if "path" not in values:
            raise ConfigParseError("dataset", f"unknown dataset {dataset!r} "
                                   f"(real datasets also need 'path')")
        preset = DATASET_PRESETS["file"]
    else:
        preset = DATASET_PRESETS[dataset]
    if dataset not in SYNTHETIC and "path" not in values:
        raise ConfigParseError("path", f"dataset {dataset!r} is read from a file")
    lr, hidden, s2_hidden, budget = preset
    values.setdefault("learning_rate", lr)
    values.setdefault("hidden", hidden)
    values.setdefault("s2_hidden", s2_hidden)
    values.setdefault("budget", budget)
    for name, cls in _NESTED.items():
        values[name] = _build_nested(name, cls, values.get(name))
    for key in _TUPLES & values.keys():
        val = values[key]
        if val is None:
            continue
        values[key] = tuple(val) if isinstance(val, (list, tuple)) else (val,)
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    _check_range("learner", cfg.learner, lambda v: v in LEARNERS,
                 f"expected one of {sorted(LEARNERS)}")
    _check_range("variant", cfg.variant, lambda v: v in VARIANTS,
                 f"expected one of {sorted(VARIANTS)}")
    _check_range("budget", cfg.budget, lambda v: 0 <= v <= 1, "must lie in [0, 1]")
    _check_range("memory", cfg.memory, lambda v: isinstance(v, int) and v >= 1,
                 "must be a positive integer")
    _check_range("learning_rate", cfg.learning_rate, lambda v: v > 0, "must be > 0")
    _check_range("s2_learning_rate", cfg.s2_learning_rate, lambda v: v > 0, "must be > 0")
    _check_range("l2", cfg.l2, lambda v: v >= 0, "must be >= 0")
    _check_range("batch_size", cfg.batch_size, lambda v: isinstance(v, int) and v >= 1,
                 "must be a positive integer")
    _check_range("epochs", cfg.epochs, lambda v: v == 1,
                 "only single-epoch incremental updates are supported")
    for key in ("hidden", "s2_hidden"):
        _check_range(key, getattr(cfg, key),
                     lambda v: len(v) > 0 and all(isinstance(u, int) and u > 0 for u in v),
                     "must be a non-empty list of positive integers")
    _check_range("seeds", cfg.seeds, lambda v: len(v) > 0 and
                 all(isinstance(s, int) for s in v), "must be a list of integers")
    _check_range("length", cfg.length, lambda v: v is None or v >= 1, "must be >= 1")
    _check_range("n_jobs", cfg.n_jobs, lambda v: isinstance(v, int) and v >= 1,
                 "must be a positive integer")
    _check_range("evaluation.alpha", cfg.evaluation.alpha, lambda v: 0 < v <= 1,
                 "must lie in (0, 1]")
    _check_range("evaluation.window", cfg.evaluation.window, lambda v: v >= 1,
                 "must be >= 1")
    _check_range("evaluation.every", cfg.evaluation.every, lambda v: v >= 1,
                 "must be >= 1")
    _check_range("evaluation.symmetric_pmauc", cfg.evaluation.symmetric_pmauc,
                 lambda v: isinstance(v, bool), "must be true or false")
    _check_range("active_learning.window", cfg.active_learning.window, lambda v: v > 1,
                 "must be > 1")
    try:
        cfg.stream_spec(cfg.seeds[0])
        BudgetTracker(cfg.budget, cfg.active_learning.window)
    except ConfigurationError as err:
        raise ConfigParseError("stream", str(err)) from None


def parse_config(text, overrides=None):
    """Parse YAML text into a resolved :class:`RunConfig`.

    ``overrides`` (e.g. command-line flags) take precedence over the text.
    """
    try:
        values = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as err:
        raise ConfigParseError("<config>", f"malformed YAML: {err}") from None
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigParseError("<config>", "top level must be a mapping")
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return resolve_config(values)


def config_to_dict(cfg):
    return asdict(cfg)


def run_single(config, seed):
    """Run one seed; returns its :class:`RunLog`."""
    stream_seed, learner_seed = np.random.SeedSequence(seed).spawn(2)
    stream = make_stream(config.stream_spec(int(stream_seed.generate_state(1)[0])))
    X_seed, X = stream.X_seed, stream.X
    if config.scale:
        scaler = MinMaxScaler(feature_range=config.scale_range).fit(X_seed)
        X_seed, X = scaler.transform(X_seed), scaler.transform(X)
    learner = make_learner(config.learner, **config.learner_params(
        np.random.default_rng(learner_seed)))
    learner.fit(X_seed, stream.y_seed, classes=stream.classes)
    index_of = {c: i for i, c in enumerate(stream.classes.tolist())}
    K = len(stream.classes)
    gm = FadingGmean(K, config.evaluation.alpha)
    auc = SlidingPmauc(K, config.evaluation.window, config.evaluation.symmetric_pmauc)
    every = config.evaluation.every
    marks = set(config.evaluation.checkpoints) | {len(stream)}
    log = RunLog(config.learner, config.dataset, seed)
    pm = 0.0
    for t, (x, y) in enumerate(zip(X, stream.y.tolist()), start=1):
        outcome = learner.step(x, Oracle(y))
        actual = index_of[y]
        gm.update(index_of[outcome.predicted_class.item()], actual)
        auc.update(outcome.class_scores, actual)
        if t % every == 0 or t in marks:
            pm = auc.value()
        log.record(t, outcome.predicted_class.item(), y, outcome.queried, gm.value(),
                   pm, outcome.budget_spent)
    return log


def _run_seed(args):
    config, seed = args
    return run_single(config, seed)


def run_experiment(config):
    """One :class:`RunLog` per seed, in seed order."""
    jobs = [(config, s) for s in config.seeds]
    if config.n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            return list(pool.map(_run_seed, jobs))
    logs = []
    for job in jobs:
        try:
            logs.append(_run_seed(job))
        except Exception as err:
            raise ExperimentError(f"{config.learner} on {config.dataset}, seed "
                                  f"{job[1]}: {type(err).__name__}: {err}") from err
    return logs


def _stats(mean, std, idx):
    return {"mean": float(mean[idx]), "std": float(std[idx])}


def summarise(logs, checkpoints=CHECKPOINTS):
    """Summary of runs sharing a learner and dataset (mean and std across seeds)."""
    agg = aggregate_runs(logs)
    ref = logs[0]
    n = len(ref)
    steps = [t for t in checkpoints if t <= ref.t[-1]]
    out = {"learner": ref.learner, "dataset": ref.dataset,
           "seeds": [log.seed for log in logs], "length": n, "checkpoints": {}}
    for t in steps:
        idx = ref.at(t)
        out["checkpoints"][str(t)] = {m: _stats(*agg[m], idx) for m in agg}
    out["final"] = {m: _stats(*agg[m], n - 1) for m in agg}
    fractions = np.array([log.query_fraction() for log in logs])
    out["final"]["query_fraction"] = {"mean": float(fractions.mean()),
                                      "std": float(fractions.std())}
    return out


def emit_results(logs, path, checkpoints=CHECKPOINTS):
    """Write ``results.csv`` (one row per step and run) and ``summary.json``."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        csv_path = path / "results.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for log in logs:
                for i in range(len(log)):
                    writer.writerow([log.t[i], log.learner, log.dataset, log.seed,
                                     log.predicted[i], log.actual[i],
                                     int(log.queried[i]), repr(log.gmean[i]),
                                     repr(log.pmauc[i]), repr(log.budget_spent[i])])
        groups = {}
        for log in logs:
            groups.setdefault((log.learner, log.dataset), []).append(log)
        summary = {"runs": [summarise(g, checkpoints) for g in groups.values()]}
        json_path = path / "summary.json"
        json_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    except OSError as err:
        raise OSError(f"cannot write results to {path}: {err}") from err
    return csv_path, json_path
