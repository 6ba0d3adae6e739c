"""Experiment harness: method comparison, parameter sweeps, estimator reliability.

Hyperparameters are tuned on the validation replicates against the
ground-truth metric; the selected model is then scored on every test
replicate. Test replicates are never touched during tuning.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import datagen, metrics
from .bundle import load_bundle
from .core import ParameterError, RankedList
from .datagen import Bundle, GenConfig, SyntheticBaseConfig
from .metrics import CappingParams, MetricKind
from .models import rank_all
from .train import TrainConfig, popularity_ranker, random_ranker, train

log = logging.getLogger(__name__)

WORKERS_ENV = "CAUSALRANK_WORKERS"
GAMMA_GRID = (0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 0.0003, 0.0001)
CHI_GRID = (0.7, 0.5, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001)
ALL_METHODS = ("Random", "Pop", "BPR", "BLCE", "DLTO", "DLCE", "Oracle")
LEARNED = ("BPR", "BLCE", "DLTO", "DLCE")
USES_CAPPING = ("DLTO", "DLCE")
SWEEPS = ("capping", "beta", "xi")


@dataclass(frozen=True)
class ExperimentPlan:
    """What to run.

    ``dataset`` is one of ``{"bundle": dir}``,
    ``{"synthetic": {...SyntheticBaseConfig}, "gen": {...GenConfig}}`` or
    ``{"log": csv, "gen": {...GenConfig}}``. Generated datasets are redrawn
    for every seed; a stored bundle is reused and only training seeds vary.
    ``train`` holds :class:`TrainConfig` defaults (``eta``, ``epochs``, ``d``...).
    """

    dataset: dict
    methods: tuple[str, ...] = ("Random", "Pop", "BPR", "BLCE", "DLTO", "DLCE")
    metrics: tuple[str, ...] = ("CP@10", "CDCG", "CAR")
    gamma_grid: tuple[float, ...] = GAMMA_GRID
    chi_grid: tuple[float, ...] = CHI_GRID
    sweep: str | None = None
    sweep_values: tuple[float, ...] = ()
    n_seeds: int = 1
    seed: int = 0
    train: dict = field(default_factory=dict)
    tuning: str = "truth"
    tuning_chi: float = 0.1
    output_dir: str = "runs/default"

    def __post_init__(self) -> None:
        for name in ("methods", "metrics", "gamma_grid", "chi_grid", "sweep_values"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.methods or not self.metrics:
            raise ParameterError("methods and metrics must be non-empty")
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad:
            raise ParameterError(f"unknown method(s) {bad}")
        for m in self.metrics:
            MetricKind.parse(m)
        if not self.gamma_grid or any(g < 0 for g in self.gamma_grid):
            raise ParameterError("gamma grid must be non-empty and >= 0")
        if not self.chi_grid:
            raise ParameterError("chi grid must be non-empty")
        for c in self.chi_grid:
            CappingParams.both(c)
        if self.sweep is not None:
            if self.sweep not in SWEEPS:
                raise ParameterError(f"sweep must be one of {SWEEPS}")
            _check_sweep_values(self.sweep, self.sweep_values)
        if self.n_seeds < 1:
            raise ParameterError("n_seeds must be >= 1")
        if self.tuning not in ("truth", "estimate"):
            raise ParameterError("tuning must be 'truth' or 'estimate'")
        if not ({"bundle"} <= set(self.dataset) or {"synthetic"} <= set(self.dataset) or {"log"} <= set(self.dataset)):
            raise ParameterError("dataset must name a 'bundle', 'synthetic' or 'log' source")
        known = {f.name for f in fields(TrainConfig)}
        extra = set(self.train) - known
        if extra:
            raise ParameterError(f"unknown train keys {sorted(extra)}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown plan keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def seeds(self) -> list[int]:
        return [self.seed + k for k in range(self.n_seeds)]

    @property
    def kinds(self) -> list[MetricKind]:
        return [MetricKind.parse(m) for m in self.metrics]


def _check_sweep_values(sweep: str, values: Sequence[float]) -> None:
    if not values:
        raise ParameterError("sweep values must be non-empty")
    for v in values:
        if sweep == "capping":
            CappingParams.both(v)
        elif sweep == "beta" and v < 0:
            raise ParameterError("beta values must be >= 0")
        elif sweep == "xi" and not 0 <= v <= 1:
            raise ParameterError("xi values must lie in [0, 1]")


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Row:
    method: str
    metric: str
    mean: float
    std: float
    gamma: float | None
    chi: float | None
    seed: int
    values: tuple[float, ...] = ()
    param: str | None = None
    value: float | None = None


@dataclass(frozen=True)
class MAERow:
    method: str
    metric: str
    chi: float
    mae: float
    seed: int
    errors: tuple[float, ...] = ()


@dataclass
class MetricReport:
    rows: list = field(default_factory=list)
    kind: str = "comparison"
    config_hash: str = ""
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "meta": self.meta,
            "rows": [asdict(r) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        row_cls = MAERow if d["kind"] == "mae" else Row
        rows = []
        for r in d["rows"]:
            r = dict(r)
            r["values" if row_cls is Row else "errors"] = tuple(r.get("values" if row_cls is Row else "errors", ()))
            rows.append(row_cls(**r))
        return cls(rows, d["kind"], d["config_hash"], d["seed"], d.get("meta", {}))

    def select(self, **crit) -> list:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in crit.items())]


def _summary(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(x)
    return f"{x:.6g}"


CSV_COLUMNS = {
    "comparison": ("method", "metric", "mean", "std", "gamma", "chi", "seed"),
    "sweep": ("param", "value", "method", "metric", "mean", "std", "gamma", "chi", "seed"),
    "mae": ("method", "metric", "chi", "mae", "seed"),
}


def emit_report(report: MetricReport, out_dir: str | Path, formats: Sequence[str] = ("csv", "json"), stem: str = "report") -> list[Path]:
    """Write ``<stem>.csv`` and/or ``<stem>.json`` under ``out_dir``."""
    if not report.rows:
        raise ParameterError("refusing to write an empty report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        cols = CSV_COLUMNS[report.kind]
        lines = [",".join(cols)]
        for r in report.rows:
            lines.append(",".join(_cell(getattr(r, c)) for c in cols))
        path = out / f"{stem}.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "json" in formats:
        path = out / f"{stem}.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def read_report(path: str | Path) -> MetricReport:
    return MetricReport.from_dict(json.loads(Path(path).read_text()))


def write_run_meta(out_dir: str | Path, plan: ExperimentPlan, command: str, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"command": command, "config_hash": plan.config_hash(), "seed": plan.seed, "plan": plan.to_dict()}
    meta.update(extra or {})
    path = out / "meta.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# datasets


def materialize(dataset: dict, seed: int, **gen_overrides) -> Bundle:
    """Load or generate the dataset for one seed."""
    if "bundle" in dataset:
        if gen_overrides:
            raise ParameterError(f"cannot regenerate a stored bundle with {sorted(gen_overrides)}; use a synthetic or log source")
        return load_bundle(dataset["bundle"])
    gen = GenConfig(**{**dataset.get("gen", {}), **gen_overrides, "seed": seed})
    if "synthetic" in dataset:
        base = SyntheticBaseConfig(**{**dataset["synthetic"], "seed": seed})
        return datagen.bundle_from_synthetic(base, gen)
    lg = datagen.ingest_weekly_logs(dataset["log"], gen.min_weeks)
    return datagen.bundle_from_log(lg, gen)


# ---------------------------------------------------------------------------
# training and evaluation


def score_on_test(ranking: RankedList, split: datagen.Split, kind: MetricKind) -> list[float]:
    return [metrics.metric_average(ranking, t, kind) for t in split.truth.replicates]


def _validation_score(ranking: RankedList, bundle: Bundle, kind: MetricKind, tuning: str, tuning_chi: float) -> float:
    v = bundle.validation
    if tuning == "truth":
        vals = [metrics.metric_average(ranking, t, kind) for t in v.truth.replicates]
    else:
        cap = CappingParams.both(tuning_chi)
        vals = [metrics.estimate_average(ranking, o, kind, cap) for o in v.observed.replicates]
    return float(np.mean(vals))


def _train_config(plan: ExperimentPlan, method: str, gamma: float, chi: float | None, seed: int) -> TrainConfig:
    base = dict(plan.train)
    base.update(method=method, gamma=gamma, seed=seed)
    base["capping"] = CappingParams.both(chi) if chi is not None else CappingParams()
    return TrainConfig(**base)


def _grid(plan: ExperimentPlan, method: str, chi_values: Sequence[float] | None = None) -> list[tuple[float, float | None]]:
    if method in USES_CAPPING:
        chis = plan.chi_grid if chi_values is None else chi_values
        return [(g, c) for g in plan.gamma_grid for c in chis]
    return [(g, None) for g in plan.gamma_grid]


def _fit_rank(args) -> RankedList:
    observed, cfg = args
    return rank_all(train(observed, cfg))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items: list) -> list:
    n = _workers()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class _Choice:
    gamma: float | None
    chi: float | None
    ranking: RankedList
    validation: float


def tune_method(
    bundle: Bundle,
    method: str,
    kinds: Sequence[MetricKind],
    plan: ExperimentPlan,
    seed: int,
    chi_values: Sequence[float] | None = None,
) -> dict[str, _Choice]:
    """Best grid point per metric, chosen on the validation split only."""
    n_users, n_items = bundle.shape
    if method == "Random":
        rk = random_ranker(n_users, n_items, seed)
        return {k.name: _Choice(None, None, rk, math.nan) for k in kinds}
    if method == "Pop":
        rk = popularity_ranker(bundle.train.observed)
        return {k.name: _Choice(None, None, rk, math.nan) for k in kinds}
    if method == "Oracle":
        rk = RankedList.from_scores(bundle.mu_t - bundle.mu_c)
        return {k.name: _Choice(None, None, rk, math.nan) for k in kinds}

    grid = _grid(plan, method, chi_values)
    jobs = [(bundle.train.observed, _train_config(plan, method, g, c, seed)) for g, c in grid]
    rankings = _map(_fit_rank, jobs)
    best: dict[str, _Choice] = {}
    for (g, c), rk in zip(grid, rankings):
        for k in kinds:
            score = _validation_score(rk, bundle, k, plan.tuning, plan.tuning_chi)
            cur = best.get(k.name)
            # first grid point wins ties, so the grid order is the tie-break
            if cur is None or score > cur.validation:
                best[k.name] = _Choice(g, c, rk, score)
    return best


def _rows_for(method: str, choices: dict[str, _Choice], bundle: Bundle, kinds, seed: int, **sweep) -> list[Row]:
    rows = []
    for k in kinds:
        ch = choices[k.name]
        vals = score_on_test(ch.ranking, bundle.test, k)
        mean, std = _summary(vals)
        rows.append(Row(method, k.name, mean, std, ch.gamma, ch.chi, seed, tuple(vals), **sweep))
        if k.base == "AR":
            rows.append(Row(method, "-" + k.name, -mean, std, ch.gamma, ch.chi, seed, tuple(-v for v in vals), **sweep))
    return rows


def compare_on(bundle: Bundle, plan: ExperimentPlan, seed: int, methods: Sequence[str] | None = None, **sweep) -> list[Row]:
    kinds = plan.kinds
    for k in kinds:
        k.check(bundle.shape[1])
    rows = []
    for method in methods or plan.methods:
        choices = tune_method(bundle, method, kinds, plan, seed)
        rows.extend(_rows_for(method, choices, bundle, kinds, seed, **sweep))
    return rows


def _report(plan: ExperimentPlan, rows: list, kind: str) -> MetricReport:
    return MetricReport(rows, kind, plan.config_hash(), plan.seed, {"n_seeds": plan.n_seeds})


def run_comparison(plan: ExperimentPlan) -> MetricReport:
    """Every method x metric, tuned on validation, scored on the test replicates."""
    rows = []
    for seed in plan.seeds:
        rows.extend(compare_on(materialize(plan.dataset, seed), plan, seed))
    return _report(plan, rows, "comparison")


def _sweep_values(plan: ExperimentPlan, name: str, values: Sequence[float] | None) -> tuple[float, ...]:
    vals = tuple(values) if values is not None else (plan.sweep_values if plan.sweep == name else ())
    _check_sweep_values(name, vals)
    return vals


def sweep_capping(plan: ExperimentPlan, values: Sequence[float] | None = None, method: str = "DLCE") -> MetricReport:
    """DLCE per capping threshold, with gamma tuned at each threshold."""
    chis = _sweep_values(plan, "capping", values)
    kinds = plan.kinds
    rows = []
    for seed in plan.seeds:
        bundle = materialize(plan.dataset, seed)
        for chi in chis:
            choices = tune_method(bundle, method, kinds, plan, seed, chi_values=(chi,))
            rows.extend(_rows_for(method, choices, bundle, kinds, seed, param="chi", value=chi))
    return _report(plan, rows, "sweep")


def sweep_unevenness(plan: ExperimentPlan, values: Sequence[float] | None = None) -> MetricReport:
    """Regenerate the personalised propensity for each beta and rerun the comparison."""
    betas = _sweep_values(plan, "beta", values)
    rows = []
    for seed in plan.seeds:
        for beta in betas:
            bundle = materialize(plan.dataset, seed, beta=beta, propensity="personalized")
            rows.extend(compare_on(bundle, plan, seed, param="beta", value=beta))
    return _report(plan, rows, "sweep")


def sweep_misspecification(plan: ExperimentPlan, values: Sequence[float] | None = None) -> MetricReport:
    """Shrink only the logged propensity's log-odds; assignments stay as drawn."""
    xis = _sweep_values(plan, "xi", values)
    rows = []
    for seed in plan.seeds:
        bundle = materialize(plan.dataset, seed)
        for xi in xis:
            logged = datagen.misspecify_propensity(bundle.propensity, xi)
            rows.extend(compare_on(bundle.with_logged(logged), plan, seed, param="xi", value=xi))
    return _report(plan, rows, "sweep")


def estimator_reliability(plan: ExperimentPlan, values: Sequence[float] | None = None) -> MetricReport:
    """MAE of the (capped) IPS estimate against the truth on each test replicate.

    Each method is tuned per metric as in the comparison; ``values`` are the
    capping thresholds of the estimator (0 = uncapped).
    """
    chis = _sweep_values(plan, "capping", values) if values is not None or plan.sweep == "capping" else (0.0, 0.01, 0.03, 0.1, 0.3)
    kinds = plan.kinds
    rows = []
    for seed in plan.seeds:
        bundle = materialize(plan.dataset, seed)
        for method in plan.methods:
            choices = tune_method(bundle, method, kinds, plan, seed)
            for k in kinds:
                rk = choices[k.name].ranking
                for chi in chis:
                    rep = metrics.estimator_mae(rk, bundle.test.observed, bundle.test.truth, k, CappingParams.both(chi))
                    rows.append(MAERow(method, k.name, chi, rep.mae, seed, tuple(float(e) for e in rep.errors)))
    return _report(plan, rows, "mae")


RUNNERS = {
    "compare": run_comparison,
    "sweep-capping": sweep_capping,
    "sweep-beta": sweep_unevenness,
    "sweep-xi": sweep_misspecification,
    "estimate": estimator_reliability,
}
