"""Experiment orchestration: ERM vs PERM sweeps over drift strength, repeated
ERM runs, bound reports and the lower-bound demo.

Every ``run_*`` function takes a config dataclass and returns a plain dict that
is JSON-serialisable and free of timestamps, so identical configs give
byte-identical result files.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import bounds as B
from .core import DriftFamily, DriftParams, coefficients, family_params
from .data import GENERATORS, Dataset, SplitSpec, balance_classes, ingest_csv, split
from .errors import DomainError, NonFiniteLoss
from .learn import PRESETS, TrainConfig, train
from .oracle import ForestConfig, fit_forest
from .rerm import rerm_exact, rerm_run
from .shiftsim import count_out_of_range, drifted_prob, labels_from_uniforms

WORKERS_ENV = "PERFPAC_WORKERS"

DEFAULT_GRID = [round(i / 10, 10) for i in range(11)]

# dataset-level defaults; None-valued config fields are filled from here
DATASET_DEFAULTS = {
    "synthetic": dict(n=5000, balance=False, split=[0.8, 0.2], two_stage=False, oracle="p_true"),
    "credit": dict(n=10000, balance=True, split=[0.8, 0.2], two_stage=False, oracle="forest"),
    "folktables": dict(n=10000, balance=True, split=[0.7, 0.3], two_stage=True, oracle="forest"),
    "csv": dict(n=0, balance=True, split=[0.8, 0.2], two_stage=False, oracle="forest"),
}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class DataOptions:
    dataset: str = "synthetic"  # synthetic | credit | folktables | csv
    csv_path: str = ""
    label_column: str = "label"
    p_column: str = "p_true"
    n: Optional[int] = None
    balance: Optional[bool] = None
    split: Optional[list] = None
    two_stage: Optional[bool] = None
    oracle: Optional[str] = None  # p_true | forest
    forest_trees: int = 18
    forest_depth: int = 8
    # training hyperparameters; None -> dataset preset
    hidden: Optional[list] = None
    optimizer: Optional[str] = None
    lr: Optional[float] = None
    epochs: Optional[int] = None
    batch_size: Optional[int] = None
    l2: Optional[float] = None
    factor: float = 0.9
    patience: int = 5
    seed: int = 0

    def _resolve_data(self):
        if self.dataset not in DATASET_DEFAULTS:
            raise DomainError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "csv" and not self.csv_path:
            raise DomainError("dataset = 'csv' needs csv_path")
        dd = DATASET_DEFAULTS[self.dataset]
        tp = PRESETS.get(self.dataset, PRESETS["credit"])
        upd = {}
        for k in ("n", "balance", "split", "two_stage", "oracle"):
            if getattr(self, k) is None:
                upd[k] = dd[k]
        for k in ("hidden", "optimizer", "lr", "epochs", "batch_size", "l2"):
            if getattr(self, k) is None:
                upd[k] = list(tp[k]) if k == "hidden" else tp[k]
        out = replace(self, **upd)
        if out.oracle not in ("p_true", "forest"):
            raise DomainError(f"unknown oracle {out.oracle!r}")
        return out

    def train_config(self, seed, loss="logistic", coeffs=None) -> TrainConfig:
        return TrainConfig(loss=loss, coeffs=coeffs, hidden=tuple(self.hidden), optimizer=self.optimizer,
                           lr=self.lr, epochs=self.epochs, batch_size=self.batch_size, l2=self.l2,
                           factor=self.factor, patience=self.patience, seed=seed)


def _drift_from(family, a, b, params) -> DriftParams:
    if params is not None:
        return DriftParams(*params)
    return family_params(family, a, b)


def _base_dataset(opts: DataOptions, repeat: int) -> Dataset:
    if opts.dataset == "csv":
        return ingest_csv(opts.csv_path, opts.label_column, opts.p_column or None)
    gen = GENERATORS[opts.dataset]
    # the synthetic sample is regenerated every repeat; stand-in tables stay fixed
    # and only their balanced subsample changes
    seed = opts.seed + repeat if opts.dataset == "synthetic" else opts.seed
    return gen(opts.n, seed)


def _prepare(opts: DataOptions, repeat: int):
    """Return (train, test, test_probs) for one repeat."""
    base = _base_dataset(opts, repeat)
    if opts.oracle == "p_true":
        if base.p is None:
            raise DomainError("oracle 'p_true' needs a probability column")
        oracle = None
    else:
        forest = fit_forest(base.X, base.y, ForestConfig(opts.forest_trees, opts.forest_depth, seed=opts.seed))
        oracle = forest.predict_proba
    ds = balance_classes(base, opts.seed + repeat) if opts.balance else base
    parts = split(ds, SplitSpec(tuple(opts.split), opts.two_stage, opts.seed + repeat))
    tr, te = parts[0], parts[-1]
    p_test = te.p if oracle is None else oracle(te.X)
    p_train = tr.p if oracle is None else oracle(tr.X)
    return tr, te, p_test, p_train


# -- sweep -------------------------------------------------------------------

@dataclass
class SweepConfig(DataOptions):
    family: str = "placebo"
    b: Optional[float] = None
    params: Optional[list] = None
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    methods: list = field(default_factory=lambda: ["erm", "perm"])
    repeats: int = 10
    clamp: bool = False
    workers: Optional[int] = None
    out: str = "sweep"

    def resolve(self) -> "SweepConfig":
        cfg = self._resolve_data()
        if cfg.repeats < 1:
            raise DomainError("repeats must be >= 1")
        if any(not 0 <= a <= 1 for a in cfg.grid):
            raise DomainError("sweep grid must lie in [0, 1]")
        if not cfg.methods or any(m not in ("erm", "perm") for m in cfg.methods):
            raise DomainError("methods must be a non-empty subset of ['erm', 'perm']")
        if cfg.params is None:
            DriftFamily(cfg.family)
        return cfg

    def drift(self, a) -> DriftParams:
        if self.clamp and self.params is not None:
            return DriftParams.loose(*self.params)
        return _drift_from(self.family, a, self.b, self.params)


def _sweep_repeat(cfg: SweepConfig, repeat: int):
    tr, te, p_test, _ = _prepare(cfg, repeat)
    seed = cfg.seed + repeat
    u_test = np.random.default_rng([cfg.seed, repeat, 99]).random(len(te))
    records = []
    erm_clf = None
    for a in cfg.grid:
        params = cfg.drift(a)
        coeffs = coefficients(params)
        for method in sorted(cfg.methods):
            rec = {"a": a, "method": method, "repeat": repeat}
            try:
                if method == "erm":
                    if erm_clf is None:
                        erm_clf = train(tr.X, tr.y, cfg.train_config(seed)).classifier
                    clf = erm_clf
                else:
                    clf = train(tr.X, tr.y, cfg.train_config(seed, "surrogate", coeffs)).classifier
            except NonFiniteLoss as exc:
                rec.update(accuracy=None, failed=str(exc))
                records.append(rec)
                continue
            d = clf.decide(te.X)
            p_tilde = drifted_prob(p_test, d, params, clamp=cfg.clamp)
            y_perf = labels_from_uniforms(u_test, p_tilde)
            rec["accuracy"] = float(np.mean(d == y_perf))
            if cfg.clamp:
                rec["n_clamped"] = count_out_of_range(p_test, d, params)
            records.append(rec)
    return records


def run_sweep(cfg: SweepConfig) -> dict:
    cfg = cfg.resolve()
    workers = cfg.workers or default_workers()
    repeats = list(range(cfg.repeats))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_repeat, [cfg] * len(repeats), repeats))
    else:
        chunks = [_sweep_repeat(cfg, r) for r in repeats]
    records = sorted((r for c in chunks for r in c), key=lambda r: (r["a"], r["method"], r["repeat"]))
    summary = []
    for a in sorted(set(cfg.grid)):
        for m in sorted(cfg.methods):
            accs = [r["accuracy"] for r in records if r["a"] == a and r["method"] == m]
            ok = [x for x in accs if x is not None]
            summary.append({
                "a": a, "method": m,
                "mean": float(np.mean(ok)) if ok else None,
                "std": float(np.std(ok)) if ok else None,
                "accuracies": accs,
                "n_failed": len(accs) - len(ok),
            })
    flags = {}
    for a in sorted(set(cfg.grid)):
        c = coefficients(cfg.drift(a)) if not cfg.clamp else None
        if c is not None and not c.surrogate_is_upper_bound:
            flags[str(a)] = "surrogate is not an upper bound (alpha1 > 0 or alpha3 > 0)"
    resolved = _resolved_dict(cfg)
    return {
        "kind": "sweep",
        "config": resolved,
        "config_hash": config_hash(resolved),
        "seeds": [cfg.seed + r for r in repeats],
        "summary": summary,
        "records": records,
        "flags": flags,
        "failed": any(s["n_failed"] for s in summary),
    }


def sweep_csv_rows(result: dict):
    yield ["a", "method", "repeat", "accuracy"]
    for r in result["records"]:
        yield [repr(r["a"]), r["method"], str(r["repeat"]),
               "" if r["accuracy"] is None else repr(r["accuracy"])]


def _resolved_dict(cfg) -> dict:
    d = asdict(cfg)
    d.pop("workers", None)  # does not affect results
    return d


# -- repeated ERM ----------------------------------------------------------------

@dataclass
class RermConfig(DataOptions):
    dataset: str = "credit"
    family: str = "custom"
    a: float = 0.5
    b: Optional[float] = None
    params: Optional[list] = field(default_factory=lambda: [0.8, 0.0, 0.48, 0.52])
    max_iters: int = 20
    exact_probs: Optional[list] = None  # finite support for the exact analyser
    out: str = "rerm"

    def resolve(self) -> "RermConfig":
        cfg = self._resolve_data()
        if cfg.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        return cfg

    def drift(self) -> DriftParams:
        return _drift_from(self.family, self.a, self.b, self.params if self.family == "custom" else None)


def run_rerm(cfg: RermConfig) -> dict:
    cfg = cfg.resolve()
    params = cfg.drift()
    tr, te, p_test, p_train = _prepare(cfg, 0)
    trace = rerm_run(tr.X, p_train, params, cfg.train_config(cfg.seed), cfg.max_iters, cfg.seed,
                     labels=tr.y, test=(te.X, p_test))
    perm = train(tr.X, tr.y, cfg.train_config(cfg.seed, "surrogate", coefficients(params))).classifier
    d = perm.decide(te.X)
    u_test = np.random.default_rng([cfg.seed, 7]).random(len(te))
    perm_acc = float(np.mean(d == labels_from_uniforms(u_test, drifted_prob(p_test, d, params))))
    out = {
        "kind": "rerm",
        "config": _resolved_dict(cfg),
        "config_hash": config_hash(_resolved_dict(cfg)),
        "params": list(params.as_tuple()),
        "status": trace.status,
        "at": trace.at,
        "period": trace.period,
        "iterations": trace.records(),
        "perm_test_accuracy": perm_acc,
    }
    if cfg.exact_probs:
        dyn = rerm_exact(cfg.exact_probs, params)
        out["exact"] = {
            "fixed_points": [list(f) for f in dyn.fixed_points],
            "cycles": [[list(s) for s in c] for c in dyn.cycles],
        }
    return out


def rerm_csv_rows(result: dict):
    yield ["iteration", "train_accuracy", "test_accuracy", "perm_test_accuracy", "n_changed"]
    for r in result["iterations"]:
        yield [str(r["iteration"]), repr(r["train_accuracy"]),
               "" if r["test_accuracy"] is None else repr(r["test_accuracy"]),
               repr(result["perm_test_accuracy"]),
               "" if r["n_changed"] is None else str(r["n_changed"])]


# -- bounds ----------------------------------------------------------------------

@dataclass
class BoundsConfig:
    family: str = "placebo"
    a: float = 0.5
    b: Optional[float] = None
    params: Optional[list] = None
    n: int = 10000
    delta: float = 0.05
    rademacher: float = 0.05
    M: float = 1.0
    eps: float = 0.0
    midpoint: bool = True
    n_hypotheses: int = 2
    which: list = field(default_factory=lambda: ["thm1", "thm2", "thm3", "finite"])
    out: str = "bounds"

    def resolve(self):
        bad = [w for w in self.which if w not in ("thm1", "thm2", "thm3", "finite")]
        if bad:
            raise DomainError(f"unknown bounds {bad}")
        return self


def report_bounds(cfg: BoundsConfig) -> dict:
    cfg = cfg.resolve()
    params = _drift_from(cfg.family, cfg.a, cfg.b, cfg.params)
    coeffs = coefficients(params)
    reports = []
    for w in cfg.which:
        if w == "thm1":
            reports.append(B.bound_thm1(coeffs, cfg.rademacher, cfg.n, cfg.delta))
        elif w == "thm2":
            reports.append(B.bound_thm2(coeffs, cfg.eps, cfg.rademacher, cfg.n, cfg.delta, cfg.midpoint))
        elif w == "thm3":
            reports.append(B.bound_thm3(cfg.M, cfg.rademacher, cfg.n, cfg.delta))
        else:
            reports.append(B.bound_finite(coeffs, cfg.n_hypotheses, cfg.n, cfg.delta))
    resolved = asdict(cfg)
    return {
        "kind": "bounds",
        "config": resolved,
        "config_hash": config_hash(resolved),
        "params": list(params.as_tuple()),
        "coeffs": list(coeffs.as_tuple()),
        "reports": [r.to_record() for r in reports],
    }


# -- lower bound -----------------------------------------------------------------

@dataclass
class LowerBoundConfig:
    abar1: float = 0.5
    eps: float = 0.2
    a2: Optional[float] = 0.3
    learner: str = "majority"  # majority | perm | plus | minus
    n: int = 50
    trials: int = 2000
    world: Optional[str] = None  # None -> adversarial choice
    seed: int = 0
    out: str = "lowerbound"


def demo_lower_bound(cfg: LowerBoundConfig) -> dict:
    inst = B.lower_bound_instance(cfg.abar1, cfg.eps, cfg.a2)
    learners = {
        "majority": B.majority_learner,
        "perm": B.perm_learner(inst.proxy_coeffs()),
        "plus": B.constant_learner(1),
        "minus": B.constant_learner(-1),
    }
    if cfg.learner not in learners:
        raise DomainError(f"unknown learner {cfg.learner!r}")
    res = B.lower_bound_simulate(inst, learners[cfg.learner], cfg.n, cfg.trials, cfg.seed, cfg.world)
    resolved = asdict(cfg)
    return {
        "kind": "lowerbound",
        "config": resolved,
        "config_hash": config_hash(resolved),
        "instance": {
            "a2": inst.a2, "a3": inst.a3, "a4": inst.a4,
            "worlds": {k: list(v.as_tuple()) for k, v in inst.worlds.items()},
            "risks": {k: {"+1": v[1], "-1": v[-1]} for k, v in inst.risks.items()},
            "optimal": {k: inst.optimal(k) for k in inst.worlds},
            "excess": {k: inst.excess(k, -inst.optimal(k)) for k in inst.worlds},
        },
        "world": res.world,
        "p_plus": res.p_plus,
        "frequency": res.frequency,
        "mean_excess": res.mean_excess,
        "threshold": cfg.eps / 4,
    }


# -- data commands ----------------------------------------------------------------

@dataclass
class GenConfig:
    dataset: str = "synthetic"  # synthetic | credit | folktables
    n: Optional[int] = None
    seed: int = 0
    balance: bool = False
    out: str = "data"


def generate(cfg: GenConfig):
    """Return ``(dataset, record)`` for the ``gen`` subcommand."""
    if cfg.dataset not in GENERATORS:
        raise DomainError(f"unknown generator {cfg.dataset!r}")
    n = cfg.n if cfg.n is not None else DATASET_DEFAULTS[cfg.dataset]["n"]
    ds = GENERATORS[cfg.dataset](n, cfg.seed)
    if cfg.balance:
        ds = balance_classes(ds, cfg.seed)
    resolved = asdict(replace(cfg, n=n))
    return ds, {
        "kind": "gen",
        "config": resolved,
        "config_hash": config_hash(resolved),
        "seeds": [cfg.seed],
        **describe(ds),
    }


def describe(ds: Dataset) -> dict:
    return {
        "n_rows": len(ds),
        "n_features": ds.n_features,
        "columns": list(ds.columns),
        "positive_rate": float(np.mean(ds.y == 1)),
        "has_p": ds.p is not None,
        "mean_p": None if ds.p is None else float(np.mean(ds.p)),
    }


@dataclass
class IngestConfig:
    csv_path: str = ""
    label_column: str = "label"
    p_column: str = "p_true"
    out: str = "ingest"


def ingest_check(cfg: IngestConfig) -> dict:
    if not cfg.csv_path:
        raise DomainError("csv_path is required")
    ds = ingest_csv(cfg.csv_path, cfg.label_column, cfg.p_column or None)
    resolved = asdict(cfg)
    return {"kind": "ingest-check", "config": resolved, "config_hash": config_hash(resolved), **describe(ds)}


CONFIG_TYPES = {
    "gen": GenConfig,
    "ingest-check": IngestConfig,
    "sweep": SweepConfig,
    "rerm": RermConfig,
    "bounds": BoundsConfig,
    "lowerbound": LowerBoundConfig,
}


def config_fields(cls):
    return [f.name for f in fields(cls)]
