"""Semi-synthetic ground truth, propensities and observed replicates.

The pipeline turns a weekly purchase/recommendation log into per-pair
outcome probabilities with and without recommendation, builds a propensity
table (observed frequencies, or a rank-based personalised one), and samples
independent replicates of potential outcomes and assignments from them.
A fully synthetic base generator stands in for a real log at desk scale.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from . import rng
from .core import (
    CLIP_HIGH,
    CLIP_LOW,
    DegenerateInputError,
    FormatError,
    GroundTruth,
    InteractionLog,
    ObservedDataset,
    ObservedReplicate,
    OutcomeReplicate,
    ParameterError,
    PropensityModel,
    Provenance,
    StructuralError,
)

log = logging.getLogger(__name__)

LOG_COLUMNS = ("user_id", "item_id", "week", "y", "z")
DEFAULT_W_GRID = tuple(round(0.1 * k, 1) for k in range(1, 21))
_ALPHA_BRACKET = (1e-9, 1e3)
_MEAN_TOL = 1e-6


@dataclass(frozen=True)
class GenConfig:
    prior_weight_grid: tuple[float, ...] = DEFAULT_W_GRID
    prior_weight: float | None = None
    propensity: str = "personalized"
    beta: float = 2.0
    target_mean_propensity: float | str = "match-original"
    xi: float = 0.0
    clip: tuple[float, float] = (CLIP_LOW, CLIP_HIGH)
    min_weeks: int = 10
    n_train: int = 10
    n_validation: int = 1
    n_test: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "prior_weight_grid", tuple(float(w) for w in self.prior_weight_grid))
        object.__setattr__(self, "clip", tuple(float(c) for c in self.clip))
        if not self.prior_weight_grid or min(self.prior_weight_grid) <= 0:
            raise ParameterError("prior weight grid must be non-empty with values > 0")
        if self.propensity not in ("original", "personalized"):
            raise ParameterError(f"propensity must be 'original' or 'personalized', got {self.propensity!r}")
        if self.beta < 0:
            raise ParameterError("beta must be >= 0")
        if not 0.0 <= self.xi <= 1.0:
            raise ParameterError("xi must lie in [0, 1]")
        if min(self.n_train, self.n_validation, self.n_test) < 1:
            raise ParameterError("replicate counts must be >= 1")
        lo, hi = self.clip
        if not 0.0 < lo < hi < 1.0:
            raise ParameterError(f"invalid clip range {self.clip}")


@dataclass(frozen=True)
class SyntheticBaseConfig:
    """Parameters of the fully synthetic base tables.

    ``skew`` is the power-law exponent of item popularity; ``effect_skew``
    does the same for the item-level additive lift, drawn independently of
    popularity so that the most purchased items are not the most persuadable.
    ``propensity_corr`` is the exponent tying the original propensity to the
    treated purchase probability.
    """

    n_users: int = 200
    n_items: int = 50
    n_weeks: int = 20
    mean_mu_t: float = 0.04
    mean_mu_c: float = 0.03
    mean_p: float = 0.15
    skew: float = 1.0
    effect_skew: float = 1.0
    lift: float = 1.0
    activity_sigma: float = 0.5
    propensity_corr: float = 1.0
    propensity_noise: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_users, self.n_items, self.n_weeks) < 1:
            raise ParameterError("counts must be >= 1")
        for name in ("mean_mu_t", "mean_mu_c", "mean_p"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        if self.skew < 0 or self.effect_skew < 0:
            raise ParameterError("skew exponents must be >= 0")


# ---------------------------------------------------------------------------
# base log


def ingest_weekly_logs(source, min_weeks: int = 10) -> InteractionLog:
    """Read a ``user_id,item_id,week,y,z`` table and apply the retention filters.

    ``source`` is a path or a DataFrame. Repeated (user, item, week) rows are
    merged by taking the maximum of ``y`` and ``z``.
    """
    df = source if isinstance(source, pd.DataFrame) else pd.read_csv(source)
    missing = [c for c in LOG_COLUMNS if c not in df.columns]
    if missing:
        raise FormatError(f"log is missing column(s): {', '.join(missing)}")
    df = df[list(LOG_COLUMNS)].copy()
    for c in ("y", "z"):
        if not df[c].isin((0, 1)).all():
            raise FormatError(f"column {c} must be binary")
    df = df.groupby(["user_id", "item_id", "week"], as_index=False, sort=True)[["y", "z"]].max()
    df = filter_log_frame(df, min_weeks)
    if df.empty:
        raise DegenerateInputError("no rows left after filtering")
    return _frame_to_log(df)


def filter_log_frame(df: pd.DataFrame, min_weeks: int = 10) -> pd.DataFrame:
    """Keep users and items with >= ``min_weeks`` purchase weeks and items seen
    both recommended and not. Repeated to a fixed point, so it is idempotent."""
    while True:
        buys = df[df["y"] == 1]
        user_weeks = buys.groupby("user_id")["week"].nunique()
        item_weeks = buys.groupby("item_id")["week"].nunique()
        z_kinds = df.groupby("item_id")["z"].nunique()
        keep_users = set(user_weeks.index[user_weeks >= min_weeks])
        keep_items = set(item_weeks.index[item_weeks >= min_weeks]) & set(z_kinds.index[z_kinds == 2])
        kept = df[df["user_id"].isin(keep_users) & df["item_id"].isin(keep_items)]
        if len(kept) == len(df):
            return kept.reset_index(drop=True)
        df = kept


def _frame_to_log(df: pd.DataFrame) -> InteractionLog:
    user_ids, users = np.unique(df["user_id"].to_numpy(), return_inverse=True)
    item_ids, items = np.unique(df["item_id"].to_numpy(), return_inverse=True)
    week_ids, weeks = np.unique(df["week"].to_numpy(), return_inverse=True)
    return InteractionLog(
        users, items, weeks, df["y"].to_numpy(), df["z"].to_numpy(),
        len(user_ids), len(item_ids), len(week_ids),
        tuple(user_ids.tolist()), tuple(item_ids.tolist()), tuple(week_ids.tolist()),
    )


def log_to_frame(lg: InteractionLog) -> pd.DataFrame:
    uid = np.asarray(lg.user_ids, dtype=object) if lg.user_ids else np.arange(lg.n_users)
    iid = np.asarray(lg.item_ids, dtype=object) if lg.item_ids else np.arange(lg.n_items)
    wid = np.asarray(lg.week_ids, dtype=object) if lg.week_ids else np.arange(lg.n_weeks)
    return pd.DataFrame({"user_id": uid[lg.users], "item_id": iid[lg.items], "week": wid[lg.weeks], "y": lg.y, "z": lg.z})


def filter_log(lg: InteractionLog, min_weeks: int = 10) -> InteractionLog:
    df = filter_log_frame(log_to_frame(lg), min_weeks)
    if df.empty:
        raise DegenerateInputError("no rows left after filtering")
    return _frame_to_log(df)


def visit_indicator(lg: InteractionLog) -> np.ndarray:
    """``V[u, t] = 1`` iff user ``u`` bought anything in week ``t``."""
    v = np.zeros((lg.n_users, lg.n_weeks), dtype=np.int8)
    buy = lg.y == 1
    v[lg.users[buy], lg.weeks[buy]] = 1
    return v


@dataclass(frozen=True)
class _Counts:
    a_t: np.ndarray
    b_t: np.ndarray
    a_c: np.ndarray
    b_c: np.ndarray
    a_z: np.ndarray
    b_z: np.ndarray


def _counts(lg: InteractionLog, n_weeks: int | None = None) -> _Counts:
    """Per-pair sums over the first ``n_weeks`` weeks (all weeks by default)."""
    n_weeks = lg.n_weeks if n_weeks is None else n_weeks
    keep = lg.weeks < n_weeks
    users, items, weeks, y, z = (a[keep] for a in (lg.users, lg.items, lg.weeks, lg.y, lg.z))
    shape = (lg.n_users, lg.n_items)
    visits = np.zeros((lg.n_users, lg.n_weeks), dtype=np.int64)
    visits[users[y == 1], weeks[y == 1]] = 1
    n_visits = visits.sum(axis=1).astype(float)

    a_t = np.zeros(shape)
    b_t = np.zeros(shape)
    bought = np.zeros(shape)
    a_z = np.zeros(shape)
    treated = z == 1
    np.add.at(a_t, (users[treated], items[treated]), y[treated])
    np.add.at(b_t, (users[treated], items[treated]), visits[users[treated], weeks[treated]])
    np.add.at(bought, (users, items), y)
    np.add.at(a_z, (users, items), z)
    b_z = np.repeat(n_visits[:, None], lg.n_items, axis=1)
    return _Counts(a_t, b_t, bought - a_t, b_z - b_t, a_z, b_z)


def _smoothed(a: np.ndarray, b: np.ndarray, w: float) -> np.ndarray:
    num = a + w * a.mean(axis=0)
    den = b + w * b.mean(axis=0)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def estimate_outcome_probs(lg: InteractionLog, w: float, n_weeks: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Purchase probabilities with and without recommendation, shrunk toward
    the item average with prior weight ``w``. Pairs with no evidence get 0."""
    if w < 0:
        raise ParameterError(f"prior weight must be >= 0, got {w}")
    c = _counts(lg, n_weeks)
    return np.clip(_smoothed(c.a_t, c.b_t, w), 0.0, 1.0), np.clip(_smoothed(c.a_c, c.b_c, w), 0.0, 1.0)


def brier_scores(lg: InteractionLog, grid: Sequence[float]) -> list[float]:
    """Brier score of each prior weight for predicting the last week.

    Probabilities are fitted on all earlier weeks. The population is every
    (user, item) pair of users who visited in the last week; the prediction
    uses the treated or control probability according to that week's ``z``.
    """
    if lg.n_weeks < 2:
        raise DegenerateInputError("need at least two weeks to tune the prior weight")
    last = lg.n_weeks - 1
    v = visit_indicator(lg)[:, last].astype(bool)
    sel = lg.weeks == last
    y_last = np.zeros((lg.n_users, lg.n_items))
    z_last = np.zeros((lg.n_users, lg.n_items), dtype=bool)
    y_last[lg.users[sel], lg.items[sel]] = lg.y[sel]
    z_last[lg.users[sel], lg.items[sel]] = lg.z[sel] == 1
    scores = []
    for w in grid:
        mu_t, mu_c = estimate_outcome_probs(lg, w, n_weeks=last)
        pred = np.where(z_last, mu_t, mu_c)[v]
        scores.append(float(np.mean((pred - y_last[v]) ** 2)) if v.any() else float("nan"))
    return scores


def tune_prior_weight(lg: InteractionLog, grid: Sequence[float] = DEFAULT_W_GRID) -> tuple[float, list[float]]:
    """Prior weight with the lowest last-week Brier score (ties: smallest ``w``)."""
    grid = list(grid)
    if not grid:
        raise ParameterError("empty prior weight grid")
    scores = brier_scores(lg, grid)
    if all(np.isnan(scores)):
        raise DegenerateInputError("no visits in the last week")
    best = min(range(len(grid)), key=lambda k: (scores[k], grid[k]))
    return grid[best], scores


def clip_propensity(p: np.ndarray, clip: tuple[float, float] = (CLIP_LOW, CLIP_HIGH)) -> np.ndarray:
    return np.clip(p, clip[0], clip[1])


def build_original_propensity(lg: InteractionLog, w: float, clip=(CLIP_LOW, CLIP_HIGH)) -> PropensityModel:
    """Observed recommendation frequency per visit, smoothed like the outcomes."""
    if w < 0:
        raise ParameterError(f"prior weight must be >= 0, got {w}")
    c = _counts(lg)
    return PropensityModel(clip_propensity(_smoothed(c.a_z, c.b_z, w), clip), Provenance("original"))


def preference_ranks(mu_t: np.ndarray, mu_c: np.ndarray, p: np.ndarray) -> np.ndarray:
    """1-based rank of each item per user by ``P*mu_t + (1-P)*mu_c``, ties by item index."""
    mu = p * mu_t + (1.0 - p) * mu_c
    order = np.argsort(-mu, axis=1, kind="stable")
    ranks = np.empty_like(order)
    ranks[np.arange(mu.shape[0])[:, None], order] = np.arange(1, mu.shape[1] + 1)
    return ranks


def _bisect_scale(f, target: float, lo: float, hi: float, what: str) -> float:
    """Smallest-error ``x`` in ``[lo, hi]`` with ``f(x) == target`` for non-decreasing ``f``."""
    if not 0.0 < target < 1.0:
        raise ParameterError(f"{what}: target mean {target} must lie in (0, 1)")
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > target + _MEAN_TOL or f_hi < target - _MEAN_TOL:
        raise ParameterError(f"{what}: cannot bracket target mean {target} (range {f_lo:.3g}..{f_hi:.3g})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    x = 0.5 * (lo + hi)
    if abs(f(x) - target) > _MEAN_TOL:
        raise ParameterError(f"{what}: bisection did not reach target mean {target}")
    return x


def personalized_alpha(ranks: np.ndarray, beta: float, target: float) -> float:
    decay = ranks.astype(float) ** (-beta)
    return _bisect_scale(lambda a: float(np.minimum(1.0, a * decay).mean()), target, *_ALPHA_BRACKET, what="alpha")


def build_personalized_propensity(
    mu_t: np.ndarray,
    mu_c: np.ndarray,
    p_orig: PropensityModel,
    beta: float,
    target_mean: float | None = None,
    clip=(CLIP_LOW, CLIP_HIGH),
) -> PropensityModel:
    """``min(1, alpha * rank^-beta)`` where rank orders items by purchase
    probability under ``p_orig``; ``alpha`` matches the mean of ``p_orig``
    (or ``target_mean``) before clipping."""
    if beta < 0:
        raise ParameterError("beta must be >= 0")
    target = p_orig.mean if target_mean is None else float(target_mean)
    ranks = preference_ranks(np.asarray(mu_t), np.asarray(mu_c), p_orig.p)
    alpha = personalized_alpha(ranks, beta, target)
    p = np.minimum(1.0, alpha * ranks.astype(float) ** (-beta))
    return PropensityModel(clip_propensity(p, clip), Provenance("personalized", beta=float(beta)))


def misspecify_propensity(pm: PropensityModel, xi: float, clip=(CLIP_LOW, CLIP_HIGH)) -> PropensityModel:
    """Shrink each log-odds toward the mean log-odds by a fraction ``xi``."""
    if not 0.0 <= xi <= 1.0:
        raise ParameterError(f"xi must lie in [0, 1], got {xi}")
    if xi == 0.0:
        return PropensityModel(pm.p.copy(), Provenance("misspecified", xi=0.0, base=pm.provenance))
    lo = logit(pm.p)
    shifted = (1.0 - xi) * lo + xi * lo.mean()
    return PropensityModel(clip_propensity(expit(shifted), clip), Provenance("misspecified", xi=float(xi), base=pm.provenance))


# ---------------------------------------------------------------------------
# replicate sampling

_ROW_BLOCK = 4096


def _bernoulli_rows(gen: np.random.Generator, prob: np.ndarray) -> np.ndarray:
    # Row blocks keep memory bounded; draws stay in row-major order so the
    # result does not depend on the block size.
    out = np.empty(prob.shape, dtype=bool)
    for start in range(0, prob.shape[0], _ROW_BLOCK):
        block = prob[start:start + _ROW_BLOCK]
        out[start:start + _ROW_BLOCK] = gen.random(block.shape) < block
    return out


def sample_replicate(mu_t, mu_c, p_true, seed: int, index: int, p_logged=None) -> tuple[OutcomeReplicate, ObservedReplicate]:
    y_t = _bernoulli_rows(rng.stream(seed, rng.OUTCOMES_T, index), mu_t)
    y_c = _bernoulli_rows(rng.stream(seed, rng.OUTCOMES_C, index), mu_c)
    z = _bernoulli_rows(rng.stream(seed, rng.ASSIGNMENTS, index), p_true)
    y = np.where(z, y_t, y_c)
    tu, ti = np.nonzero(y_t | y_c)
    truth = OutcomeReplicate(tu, ti, y_t[tu, ti], y_c[tu, ti])
    ou, oi = np.nonzero(y | z)
    p_log = p_true if p_logged is None else p_logged
    obs = ObservedReplicate(ou, oi, y[ou, oi], z[ou, oi], p_log[ou, oi])
    return truth, obs


def sample_replicates(
    mu_t: np.ndarray,
    mu_c: np.ndarray,
    pm: PropensityModel,
    n: int,
    seed: int,
    logged: PropensityModel | None = None,
    start: int = 0,
) -> tuple[GroundTruth, ObservedDataset]:
    """Draw ``n`` independent replicates of ``(Y^T, Y^C, Z)``.

    Replicate ``k`` uses the streams of index ``start + k``. Assignments are
    drawn from ``pm``; the observed records carry ``logged`` (default ``pm``).
    """
    mu_t = np.asarray(mu_t, dtype=float)
    mu_c = np.asarray(mu_c, dtype=float)
    if mu_t.shape != mu_c.shape or mu_t.shape != pm.shape:
        raise StructuralError(f"shape mismatch: mu_t {mu_t.shape}, mu_c {mu_c.shape}, propensity {pm.shape}")
    if logged is not None and logged.shape != pm.shape:
        raise StructuralError("logged propensity shape differs from the assignment propensity")
    p_logged = None if logged is None else logged.p
    truths, observed = [], []
    for k in range(n):
        t, o = sample_replicate(mu_t, mu_c, pm.p, seed, start + k, p_logged)
        truths.append(t)
        observed.append(o)
    return GroundTruth(mu_t, mu_c, tuple(truths)), ObservedDataset(tuple(observed), *mu_t.shape)


# ---------------------------------------------------------------------------
# synthetic base


def rescale_to_mean(x: np.ndarray, target: float, what: str = "rescale") -> np.ndarray:
    """``min(1, c*x)`` with ``c`` chosen so the mean equals ``target``."""
    x = np.asarray(x, dtype=float)
    if x.max() <= 0:
        raise ParameterError(f"{what}: all-zero input cannot be rescaled")
    reach = float((x > 0).mean())
    if target >= reach:
        raise ParameterError(f"{what}: target mean {target} unreachable (max {reach})")
    f = lambda c: float(np.minimum(1.0, c * x).mean())
    hi = 1.0 / x[x > 0].min()
    c = _bisect_scale(f, target, 0.0, hi, what)
    return np.minimum(1.0, c * x)


def _power_law(gen: np.random.Generator, n: int, exponent: float) -> np.ndarray:
    weights = np.arange(1, n + 1, dtype=float) ** (-exponent)
    return weights[gen.permutation(n)]


def generate_synthetic_base(cfg: SyntheticBaseConfig) -> tuple[np.ndarray, np.ndarray, PropensityModel]:
    """Desk-scale ``(mu_t, mu_c, original propensity)`` tables.

    ``mu_c`` is user activity times item popularity; ``mu_t`` adds an item
    lift drawn independently of popularity; the propensity follows
    ``mu_t ** propensity_corr`` with log-normal noise.
    """
    gen = rng.stream(cfg.seed, rng.SYNTHETIC_BASE)
    activity = gen.lognormal(0.0, cfg.activity_sigma, size=cfg.n_users)
    popularity = _power_law(gen, cfg.n_items, cfg.skew)
    effect = _power_law(gen, cfg.n_items, cfg.effect_skew)
    noise = gen.lognormal(0.0, cfg.propensity_noise, size=(cfg.n_users, cfg.n_items))

    mu_c = rescale_to_mean(np.outer(activity, popularity), cfg.mean_mu_c, "mu_c")
    additive = np.outer(activity, effect)
    additive *= mu_c.mean() / additive.mean()
    mu_t = rescale_to_mean(np.minimum(1.0, mu_c * cfg.lift + additive), cfg.mean_mu_t, "mu_t")
    p = rescale_to_mean(mu_t ** cfg.propensity_corr * noise, cfg.mean_p, "propensity")
    return mu_t, mu_c, PropensityModel(clip_propensity(p), Provenance("synthetic"))


def simulate_weekly_log(mu_t: np.ndarray, mu_c: np.ndarray, p: np.ndarray, n_weeks: int, seed: int, visit_rate: float = 0.7) -> InteractionLog:
    """Weekly log drawn from known tables; purchases only happen on visits."""
    gen = rng.stream(seed, "weekly_log")
    n_users, n_items = mu_t.shape
    rows = []
    for t in range(n_weeks):
        visit = gen.random(n_users) < visit_rate
        z = gen.random((n_users, n_items)) < p
        buy = gen.random((n_users, n_items)) < np.where(z, mu_t, mu_c)
        buy &= visit[:, None]
        u, i = np.nonzero(buy | z)
        rows.append((u, i, np.full(len(u), t), buy[u, i], z[u, i]))
    cols = [np.concatenate(c) for c in zip(*rows)]
    order = np.lexsort((cols[2], cols[1], cols[0]))
    return InteractionLog(*(c[order] for c in cols), n_users, n_items, n_weeks)


# ---------------------------------------------------------------------------
# full dataset


@dataclass(frozen=True)
class Split:
    truth: GroundTruth
    observed: ObservedDataset


@dataclass(frozen=True)
class Bundle:
    """Everything one experiment needs: base tables and the three splits."""

    mu_t: np.ndarray
    mu_c: np.ndarray
    propensity: PropensityModel
    logged: PropensityModel
    train: Split
    validation: Split
    test: Split
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mu_t.shape

    def with_logged(self, logged: PropensityModel) -> "Bundle":
        """Same draws, different logged propensity (assignments unchanged)."""
        def swap(s: Split) -> Split:
            return Split(s.truth, s.observed.with_propensity(logged))
        meta = dict(self.meta, logged_provenance=logged.provenance.to_dict())
        return Bundle(self.mu_t, self.mu_c, self.propensity, logged, swap(self.train), swap(self.validation), swap(self.test), meta)


def assemble_bundle(mu_t, mu_c, p_true: PropensityModel, cfg: GenConfig, extra_meta: dict | None = None) -> Bundle:
    """Sample the train/validation/test replicates from finished base tables."""
    logged = misspecify_propensity(p_true, cfg.xi, cfg.clip) if cfg.xi > 0 else p_true
    splits = []
    start = 0
    for n in (cfg.n_train, cfg.n_validation, cfg.n_test):
        truth, obs = sample_replicates(mu_t, mu_c, p_true, n, cfg.seed, logged=logged, start=start)
        splits.append(Split(truth, obs))
        start += n
    meta = {
        "gen_config": asdict(cfg),
        "seed": cfg.seed,
        "provenance": p_true.provenance.to_dict(),
        "logged_provenance": logged.provenance.to_dict(),
        "splits": {"train": cfg.n_train, "validation": cfg.n_validation, "test": cfg.n_test},
    }
    meta.update(extra_meta or {})
    return Bundle(np.asarray(mu_t), np.asarray(mu_c), p_true, logged, *splits, meta=meta)


def propensity_for(cfg: GenConfig, mu_t, mu_c, p_orig: PropensityModel) -> PropensityModel:
    if cfg.propensity == "original":
        return p_orig
    target = None if cfg.target_mean_propensity == "match-original" else float(cfg.target_mean_propensity)
    return build_personalized_propensity(mu_t, mu_c, p_orig, cfg.beta, target, cfg.clip)


def bundle_from_log(lg: InteractionLog, cfg: GenConfig) -> Bundle:
    """Full semi-synthetic pipeline starting from a filtered weekly log."""
    if cfg.prior_weight is None:
        w, scores = tune_prior_weight(lg, cfg.prior_weight_grid)
        log.info("prior weight %.2f selected (Brier %.6g)", w, min(scores))
    else:
        w, scores = cfg.prior_weight, []
    mu_t, mu_c = estimate_outcome_probs(lg, w)
    p_orig = build_original_propensity(lg, w, cfg.clip)
    p_true = propensity_for(cfg, mu_t, mu_c, p_orig)
    extra = {
        "source": "log",
        "prior_weight": w,
        "brier_scores": scores,
        "index_map": {"user_ids": list(lg.user_ids), "item_ids": list(lg.item_ids), "week_ids": list(lg.week_ids)},
    }
    return assemble_bundle(mu_t, mu_c, p_true, cfg, extra)


def bundle_from_synthetic(base: SyntheticBaseConfig, cfg: GenConfig) -> Bundle:
    mu_t, mu_c, p_orig = generate_synthetic_base(base)
    p_true = propensity_for(cfg, mu_t, mu_c, p_orig)
    return assemble_bundle(mu_t, mu_c, p_true, cfg, {"source": "synthetic", "synthetic_config": asdict(base)})

