"""End-to-end run: extract -> rank -> select -> tune -> train -> evaluate.

Ranking, standardization and PSO fitness only ever see the train and
verify views; the test split is touched once, by the final evaluation.
"""
from __future__ import annotations

import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cart, metrics
from .dataio import HERLEV_CLASSES, HERLEV_NORMAL, FeatureTable, load_cell
from .errors import (
    BadConfig,
    ClassTooSmall,
    ExtractionFailures,
    StageError,
    ValidationError,
)
from .features import DEFAULT_CATALOG, extract_all
from .pso import SvmParams, SwarmConfig, tune_svm
from .svm import ConvergenceWarning, train_multiclass

TASKS = ("two_class", "seven_class")


def _default_swarm():
    return SwarmConfig(target_fitness=1.0)


@dataclass(frozen=True)
class PipelineConfig:
    k_selected: int = 9
    ratios: tuple = (0.6, 0.2, 0.2)  # train, verify, test
    task: str = "seven_class"
    seed: int = 0
    n_trees: int = 25
    cart: cart.CartParams = cart.CartParams()
    swarm: SwarmConfig = field(default_factory=_default_swarm)
    svm: SvmParams = SvmParams()
    class_list: tuple | None = None
    normal_classes: tuple | None = None

    def validate(self):
        if not 1 <= self.k_selected <= 20:
            raise BadConfig(f"k_selected must be in 1..20, got {self.k_selected}")
        if len(self.ratios) != 3 or min(self.ratios) <= 0 or abs(sum(self.ratios) - 1) > 1e-9:
            raise BadConfig(f"ratios must be three positive numbers summing to 1: {self.ratios}")
        if self.task not in TASKS:
            raise BadConfig(f"task must be one of {TASKS}")
        if self.n_trees < 1:
            raise BadConfig("n_trees must be >= 1")
        self.swarm.validate()

    def to_dict(self):
        return {
            "k_selected": self.k_selected,
            "ratios": list(self.ratios),
            "task": self.task,
            "seed": self.seed,
            "n_trees": self.n_trees,
            "cart": {
                "max_depth": self.cart.max_depth,
                "min_samples_split": self.cart.min_samples_split,
                "min_gain": self.cart.min_gain,
            },
            "swarm": self.swarm.to_dict(),
            "svm": self.svm.to_dict(),
            "class_list": None if self.class_list is None else list(self.class_list),
            "normal_classes": None if self.normal_classes is None else list(self.normal_classes),
        }

    @classmethod
    def from_dict(cls, d, base=None):
        """Overlay the keys of ``d`` on ``base`` (defaults if omitted)."""
        cfg = base or cls()
        known = set(cls().to_dict())
        unknown = set(d) - known
        if unknown:
            raise BadConfig(f"unknown config key(s): {sorted(unknown)}")
        kw = {}
        for key, value in d.items():
            if key == "cart":
                kw[key] = replace(cfg.cart, **value)
            elif key == "swarm":
                merged = cfg.swarm.to_dict()
                merged.update(value)
                kw[key] = SwarmConfig.from_dict(merged)
            elif key == "svm":
                kw[key] = replace(cfg.svm, **value)
            elif key in ("ratios", "class_list", "normal_classes"):
                kw[key] = None if value is None else tuple(value)
            else:
                kw[key] = value
        try:
            return replace(cfg, **kw)
        except TypeError as exc:
            raise BadConfig(str(exc)) from exc

    @classmethod
    def load(cls, path, overrides=None):
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise BadConfig(f"{path}: {exc}") from exc
        cfg = cls.from_dict(d)
        return cls.from_dict(overrides, cfg) if overrides else cfg


def extract_features(manifest, catalog=DEFAULT_CATALOG, n_jobs=1):
    """One feature row per manifest record; all failures reported together."""

    def one(record):
        try:
            return extract_all(load_cell(record), catalog), None
        except (ValidationError, OSError) as exc:
            return None, exc

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            results = list(ex.map(one, manifest.records))
    else:
        results = [one(r) for r in manifest.records]
    failures = [(r.sample_id, err) for r, (_, err) in zip(manifest.records, results) if err]
    if failures:
        raise ExtractionFailures(failures)
    return FeatureTable(
        [r.sample_id for r in manifest.records],
        [r.label for r in manifest.records],
        np.array([row for row, _ in results]).reshape(-1, 20),
        catalog.version,
        list(manifest.class_list),
    )


@dataclass
class SplitAssignment:
    tags: list  # "train" | "verify" | "test" per row
    ratios: tuple
    seed: int

    def indices(self, tag):
        return [i for i, t in enumerate(self.tags) if t == tag]


def split(labels, ratios=(0.6, 0.2, 0.2), seed=0, classes=None):
    """Stratified shuffle-split; each class contributes to every split."""
    labels = list(labels)
    classes = list(classes) if classes is not None else list(dict.fromkeys(labels))
    rng = np.random.default_rng(seed)
    tags = [None] * len(labels)
    for cl in classes:
        idx = [i for i, lab in enumerate(labels) if lab == cl]
        if not idx:
            continue
        n = len(idx)
        if n < 3:
            raise ClassTooSmall(cl, n)
        perm = [idx[i] for i in rng.permutation(n)]
        n_train = max(1, min(int(round(n * ratios[0])), n - 2))
        n_verify = max(1, min(int(round(n * ratios[1])), n - n_train - 1))
        for j, i in enumerate(perm):
            tags[i] = "train" if j < n_train else ("verify" if j < n_train + n_verify else "test")
    return SplitAssignment(tags, tuple(ratios), seed)


@dataclass
class RunReport:
    config: dict
    seed: int
    task: str
    classes: list
    normal_classes: list | None
    split_sizes: dict
    importance: list
    selected_features: list
    tuning: dict
    evaluation: metrics.EvalReport
    converged: bool
    timings: dict
    model: object = field(default=None, repr=False)
    trace: list = field(default_factory=list, repr=False)  # raw PSO trace

    def to_dict(self, include_timings=True):
        d = {
            "config": self.config,
            "seed": self.seed,
            "task": self.task,
            "classes": self.classes,
            "normal_classes": self.normal_classes,
            "split_sizes": self.split_sizes,
            "importance": self.importance,
            "selected_features": self.selected_features,
            "tuning": self.tuning,
            "evaluation": self.evaluation.to_dict(),
            "converged": self.converged,
        }
        if include_timings:
            d["timings"] = self.timings
        return d


def _resolve_task(table, config):
    classes = list(config.class_list) if config.class_list else table.classes
    normal = config.normal_classes
    if normal is None and set(classes) <= set(HERLEV_CLASSES):
        normal = tuple(c for c in HERLEV_NORMAL if c in classes)
    elif normal is None and set(classes) == {metrics.NORMAL, metrics.ABNORMAL}:
        normal = (metrics.NORMAL,)
    if config.task == "two_class":
        if not normal:
            raise BadConfig("two_class task needs normal_classes")
        if not set(normal) < set(classes):
            raise BadConfig("normal_classes must be a strict subset of the classes")
    return classes, (list(normal) if normal else None)


def run_pipeline(table, config=PipelineConfig(), catalog=DEFAULT_CATALOG):
    """Rank on train, select top-k, tune (c, sigma) on verify, retrain on
    train, evaluate once on test."""
    config.validate()
    timings = {}
    classes, normal = _resolve_task(table, config)
    unknown = set(table.labels) - set(classes)
    if unknown:
        raise ValidationError(f"labels not in class list: {sorted(unknown)}")
    labels = list(table.labels)
    if config.task == "two_class":
        labels = metrics.collapse_labels(labels, normal)
        task_classes = [metrics.NORMAL, metrics.ABNORMAL]
    else:
        task_classes = [c for c in classes if c in set(labels)]
    y = np.array(labels, dtype=object)

    assignment = split(labels, config.ratios, config.seed, task_classes)
    tr, va, te = (assignment.indices(t) for t in ("train", "verify", "test"))
    X_train, y_train = table.X[tr], y[tr]
    X_verify, y_verify = table.X[va], y[va]

    t0 = time.perf_counter()
    try:
        codes = np.array([task_classes.index(v) for v in y_train])
        report = cart.feature_importance(
            X_train, codes, config.cart, config.n_trees, config.seed, catalog.names
        )
    except ValidationError as exc:
        raise StageError("rank", exc) from exc
    timings["rank"] = time.perf_counter() - t0

    selected = cart.select_top_k(report, config.k_selected)
    cols = [i - 1 for i in selected]

    t0 = time.perf_counter()
    swarm = replace(config.swarm, seed=config.seed)
    try:
        tuned = tune_svm(X_train[:, cols], y_train, X_verify[:, cols], y_verify, swarm, config.svm)
    except ValidationError as exc:
        raise StageError("tune", exc) from exc
    timings["tune"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        try:
            model = train_multiclass(
                X_train[:, cols], y_train, c=tuned.c, sigma=tuned.sigma, tol=config.svm.tol,
                max_passes=config.svm.max_passes, classes=task_classes,
            )
        except ValidationError as exc:
            raise StageError("train", exc) from exc
    timings["train"] = time.perf_counter() - t0
    converged = model.converged and not any(
        issubclass(w.category, ConvergenceWarning) for w in caught
    )

    t0 = time.perf_counter()
    pred = model.predict(table.X[te][:, cols])
    evaluation = metrics.evaluate(
        list(y[te]), pred, task_classes,
        normal if config.task == "seven_class" else None,
    )
    timings["evaluate"] = time.perf_counter() - t0

    model.feature_indices = list(selected)
    model.metadata = {
        "catalog_version": table.catalog_version,
        "task": config.task,
        "normal_classes": normal,
        "source_classes": list(classes),
        "c": tuned.c,
        "sigma": tuned.sigma,
    }
    return RunReport(
        config=config.to_dict(),
        seed=config.seed,
        task=config.task,
        classes=list(task_classes),
        normal_classes=normal,
        split_sizes={"train": len(tr), "verify": len(va), "test": len(te)},
        importance=report.to_dict(),
        selected_features=[{"index": i, "name": catalog.name(i)} for i in selected],
        tuning={
            "c": tuned.c,
            "sigma": tuned.sigma,
            "verify_accuracy": tuned.fitness,
            "stop_reason": tuned.stop_reason,
            "trace": [
                {"iteration": it, "best_fitness": f, "c": float(10.0 ** p[0]),
                 "sigma": float(10.0 ** p[1])}
                for it, f, p in tuned.trace
            ],
        },
        evaluation=evaluation,
        converged=converged,
        timings=timings,
        model=model,
        trace=tuned.trace,
    )


def predict_table(model, table):
    cols = [i - 1 for i in (model.feature_indices or range(1, 21))]
    return model.predict(table.X[:, cols])


def evaluate_table(model, table):
    """Score a saved model against the labels of a feature table."""
    meta = model.metadata
    labels = list(table.labels)
    if meta.get("task") == "two_class":
        labels = metrics.collapse_labels(labels, meta["normal_classes"])
        normal = None
    else:
        normal = meta.get("normal_classes")
    pred = predict_table(model, table)
    return metrics.evaluate(labels, pred, list(model.classes), normal)


def emit_report(report, fmt="json", include_timings=True):
    if fmt == "json":
        return json.dumps(report.to_dict(include_timings), indent=2) + "\n"
    if fmt == "csv":
        return report.evaluation.to_csv()
    if fmt == "text":
        ev = report.evaluation
        lines = [
            f"task: {report.task}  classes: {', '.join(map(str, report.classes))}",
            f"split sizes: {report.split_sizes}",
            "selected features (rank order):",
        ]
        lines += [f"  {n + 1}. [{f['index']:02d}] {f['name']}"
                  for n, f in enumerate(report.selected_features)]
        lines += [
            f"tuned c = {report.tuning['c']:.6g}, sigma = {report.tuning['sigma']:.6g} "
            f"(verify accuracy {report.tuning['verify_accuracy']:.4f})",
            f"test n = {ev.n}: ACC {ev.accuracy:.4%}  SEN {_pct(ev.sensitivity)}  "
            f"SPE {_pct(ev.specificity)}",
            f"AAE {ev.aae:.5f}  RMSE {ev.rmse:.5f}  MAE {ev.mae:g}",
        ]
        if not report.converged:
            lines.append("warning: final SVM did not converge")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _pct(v):
    return str(v) if v is metrics.Undefined else f"{v:.4%}"


__all__ = [
    "PipelineConfig", "SplitAssignment", "RunReport", "extract_features", "split",
    "run_pipeline", "predict_table", "evaluate_table", "emit_report",
]
