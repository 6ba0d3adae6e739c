"""Pairwise SGD trainers for causal-effect ranking, plus Pop and Random rankers.

Every trainer draws ``(u, i)`` from the positive observed records and an
item ``j`` to compare against, then descends a weighted pairwise surrogate
of the rank of ``i``:

* DLCE weights treated positives by ``1/max(P, chi_t)`` and control positives
  by ``1/max(1-P, chi_c)``; treated positives are pushed up, control ones down.
* BLCE uses the constant naive weights ``UI/sum(Z)`` and ``UI/sum(1-Z)``.
* DLTO is DLCE with every control sample skipped.
* BPR treats every positive as treated with weight 1 and draws ``j`` among
  the user's non-purchased items.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numba
import numpy as np

from . import rng
from .core import DegenerateInputError, MFModel, NumericError, ObservedDataset, ParameterError, RankedList
from .metrics import NO_CAP, CappingParams
from .models import InitConfig, init_model, rank_all

log = logging.getLogger(__name__)

METHODS = ("DLCE", "BLCE", "DLTO", "BPR")
LOSSES = ("UB", "AP")

TREATED, CONTROL, SKIP = 1, 0, -1
_UB, _AP = 0, 1


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.01
    gamma: float = 0.001
    omega: float = 1.0
    capping: CappingParams = NO_CAP
    epochs: int = 50
    loss: str = "UB"
    method: str = "DLCE"
    d: int = 200
    init_scale: float = 0.1
    seed: int = 0
    algorithm1_literal: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.capping, dict):
            object.__setattr__(self, "capping", CappingParams(**self.capping))
        elif isinstance(self.capping, (int, float)):
            object.__setattr__(self, "capping", CappingParams.both(float(self.capping)))
        if self.eta <= 0:
            raise ParameterError("eta must be > 0")
        if self.gamma < 0:
            raise ParameterError("gamma must be >= 0")
        if self.omega <= 0:
            raise ParameterError("omega must be > 0")
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")
        if self.loss not in LOSSES:
            raise ParameterError(f"loss must be one of {LOSSES}")
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}")

    @property
    def init(self) -> InitConfig:
        return InitConfig(self.d, self.init_scale, self.seed)


@dataclass(frozen=True)
class TripletSample:
    """One SGD sample: positive record ``(u, i)`` with its ``z`` and logged
    ``p``, and a comparison item ``j``. ``weight`` overrides the DLCE weight."""

    u: int
    i: int
    j: int
    z: int
    p: float
    weight: float | None = None

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise ParameterError("comparison item j must differ from i")


# ---------------------------------------------------------------------------
# surrogate losses


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True)
def _softplus(x):
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


@numba.njit(cache=True)
def _surrogate(s, arm, weight, omega, loss_kind, literal):
    """Loss and its derivative with respect to the score difference ``s``."""
    if literal:
        sign = -1.0
    else:
        sign = 1.0
    x = sign * omega * s
    if loss_kind == 0:
        if arm == 1:
            return weight * _softplus(-x), -weight * sign * omega * _sigmoid(-x)
        return weight * _softplus(x), weight * sign * omega * _sigmoid(x)
    sg = _sigmoid(-x)
    slope = sign * omega * sg * (1.0 - sg)
    if arm == 1:
        return weight * sg, -weight * slope
    return -weight * sg, weight * slope


@numba.njit(cache=True)
def _sgd_epoch(pu, qi, users, items, comps, weights, arms, eta, gamma, omega, loss_kind, literal):
    """In-place SGD over one epoch of samples.

    Returns (loss sum, applied steps, index of the first non-finite step or -1).
    """
    d = pu.shape[1]
    total = 0.0
    applied = 0
    new_u = np.empty(d)
    new_i = np.empty(d)
    new_j = np.empty(d)
    for k in range(users.shape[0]):
        arm = arms[k]
        if arm < 0:
            continue
        u = users[k]
        i = items[k]
        j = comps[k]
        s = 0.0
        for f in range(d):
            s += pu[u, f] * (qi[i, f] - qi[j, f])
        loss, g = _surrogate(s, arm, weights[k], omega, loss_kind, literal)
        ok = math.isfinite(loss) and math.isfinite(g)
        for f in range(d):
            a = pu[u, f]
            b = qi[i, f]
            c = qi[j, f]
            new_u[f] = a - eta * (g * (b - c) + gamma * a)
            new_i[f] = b - eta * (g * a + gamma * b)
            new_j[f] = c - eta * (-g * a + gamma * c)
            if not (math.isfinite(new_u[f]) and math.isfinite(new_i[f]) and math.isfinite(new_j[f])):
                ok = False
        if not ok:
            return total, applied, k
        for f in range(d):
            pu[u, f] = new_u[f]
            qi[i, f] = new_i[f]
            qi[j, f] = new_j[f]
        total += loss
        applied += 1
    return total, applied, -1


def dlce_weight(z: int, p: float, capping: CappingParams) -> float:
    return 1.0 / max(p, capping.chi_t) if z == 1 else 1.0 / max(1.0 - p, capping.chi_c)


def _sample_weight(sample: TripletSample, cfg: TrainConfig) -> float:
    return sample.weight if sample.weight is not None else dlce_weight(sample.z, sample.p, cfg.capping)


def score_difference(model: MFModel, u: int, i: int, j: int) -> float:
    return float(model.user_factors[u] @ (model.item_factors[i] - model.item_factors[j]))


def _triplet_loss(sample: TripletSample, model: MFModel, cfg: TrainConfig, loss_kind: int) -> float:
    s = score_difference(model, sample.u, sample.i, sample.j)
    if not math.isfinite(s):
        raise NumericError(f"non-finite score difference for (u={sample.u}, i={sample.i}, j={sample.j})")
    arm = TREATED if sample.z == 1 else CONTROL
    loss, _ = _surrogate(s, arm, _sample_weight(sample, cfg), cfg.omega, loss_kind, cfg.algorithm1_literal)
    return float(loss)


def triplet_loss_ub(sample: TripletSample, model: MFModel, cfg: TrainConfig) -> float:
    """Weighted logistic upper bound: ``softplus(-w s)`` treated, ``softplus(w s)`` control."""
    return _triplet_loss(sample, model, cfg, _UB)


def triplet_loss_ap(sample: TripletSample, model: MFModel, cfg: TrainConfig) -> float:
    """Weighted sigmoid approximation: ``+sigma(-w s)`` treated, ``-sigma(-w s)`` control."""
    return _triplet_loss(sample, model, cfg, _AP)


def triplet_loss(sample: TripletSample, model: MFModel, cfg: TrainConfig) -> float:
    return _triplet_loss(sample, model, cfg, _UB if cfg.loss == "UB" else _AP)


def triplet_gradients(sample: TripletSample, model: MFModel, cfg: TrainConfig):
    """Loss and its gradients with respect to ``p_u``, ``q_i`` and ``q_j``."""
    pu = model.user_factors[sample.u]
    qi, qj = model.item_factors[sample.i], model.item_factors[sample.j]
    s = float(pu @ (qi - qj))
    arm = TREATED if sample.z == 1 else CONTROL
    loss, g = _surrogate(s, arm, _sample_weight(sample, cfg), cfg.omega, _UB if cfg.loss == "UB" else _AP, cfg.algorithm1_literal)
    return float(loss), g * (qi - qj), g * pu, -g * pu


def sgd_step(model: MFModel, sample: TripletSample, cfg: TrainConfig) -> MFModel:
    """One regularised SGD update of ``p_u``, ``q_i`` and ``q_j``; returns a new model."""
    loss, g_u, g_i, g_j = triplet_gradients(sample, model, cfg)
    pu = model.user_factors.copy()
    qi = model.item_factors.copy()
    u, i, j = sample.u, sample.i, sample.j
    new_u = pu[u] - cfg.eta * (g_u + cfg.gamma * pu[u])
    new_i = qi[i] - cfg.eta * (g_i + cfg.gamma * qi[i])
    new_j = qi[j] - cfg.eta * (g_j + cfg.gamma * qi[j])
    if not (np.isfinite(loss) and np.isfinite(new_u).all() and np.isfinite(new_i).all() and np.isfinite(new_j).all()):
        raise NumericError(f"non-finite update for sample (u={u}, i={i}, j={j}, z={sample.z}, p={sample.p})")
    pu[u], qi[i], qi[j] = new_u, new_i, new_j
    return MFModel(pu, qi)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class EpochLog:
    epoch: int
    mean_triplet_loss: float
    validation_metric: float | None = None


@dataclass
class TrainResult:
    model: MFModel
    history: list[EpochLog] = field(default_factory=list)

    def write_log(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "mean_triplet_loss", "validation_metric"])
            for e in self.history:
                vm = "" if e.validation_metric is None else f"{e.validation_metric:.17g}"
                w.writerow([e.epoch, f"{e.mean_triplet_loss:.17g}", vm])


@dataclass(frozen=True)
class _Plan:
    """Positive records and their per-sample weights and arms."""

    users: np.ndarray
    items: np.ndarray
    weights: np.ndarray
    arms: np.ndarray
    purchased: np.ndarray | None


def _prepare(data: ObservedDataset, cfg: TrainConfig) -> _Plan:
    rec = data.concatenated()
    pos = rec.y == 1
    users, items, z, p = rec.users[pos], rec.items[pos], rec.z[pos].astype(np.int64), rec.p[pos]
    if len(users) == 0:
        raise DegenerateInputError("no positive records to train on")
    purchased = None
    if cfg.method == "DLCE" or cfg.method == "DLTO":
        weights = np.where(z == 1, 1.0 / np.maximum(p, cfg.capping.chi_t), 1.0 / np.maximum(1.0 - p, cfg.capping.chi_c))
        arms = np.where(z == 1, TREATED, CONTROL if cfg.method == "DLCE" else SKIP)
        if cfg.method == "DLTO" and not (arms == TREATED).any():
            raise DegenerateInputError("DLTO needs at least one treated positive")
    elif cfg.method == "BLCE":
        n_pairs = data.n_users * data.n_items * len(data)
        n_treated = sum(r.n_treated for r in data.replicates)
        if n_treated == 0 or n_treated == n_pairs:
            raise DegenerateInputError("BLCE needs both treated and control pairs")
        w_t, w_c = n_pairs / n_treated, n_pairs / (n_pairs - n_treated)
        weights = np.where(z == 1, w_t, w_c)
        arms = np.where(z == 1, TREATED, CONTROL)
    else:
        weights = np.ones(len(users))
        arms = np.full(len(users), TREATED)
        purchased = np.zeros((data.n_users, data.n_items), dtype=bool)
        purchased[users, items] = True
    return _Plan(users, items, weights.astype(float), arms.astype(np.int64), purchased)


def _draw_comparisons(gen: np.random.Generator, users: np.ndarray, items: np.ndarray, n_items: int, purchased) -> np.ndarray:
    if purchased is None:
        j = gen.integers(0, n_items - 1, size=len(items))
        return j + (j >= items)
    # BPR: redraw until j is not purchased by u; users who bought everything keep j = i (skipped)
    j = gen.integers(0, n_items, size=len(items))
    full = purchased[users].all(axis=1)
    bad = purchased[users, j] & ~full
    while bad.any():
        j[bad] = gen.integers(0, n_items, size=int(bad.sum()))
        bad = purchased[users, j] & ~full
    j[full] = items[full]
    return j


def fit(
    data: ObservedDataset,
    cfg: TrainConfig,
    validation: Callable[[MFModel], float] | None = None,
    model: MFModel | None = None,
) -> TrainResult:
    """Train an MF model on the pooled training replicates.

    Each epoch draws ``|D|`` positive records uniformly with replacement.
    ``validation``, if given, is evaluated after every epoch and logged.
    """
    if data.n_items < 2:
        raise DegenerateInputError("need at least two items")
    plan = _prepare(data, cfg)
    if model is None:
        model = init_model(cfg.init, data.n_users, data.n_items)
    pu = model.user_factors.copy()
    qi = model.item_factors.copy()
    gen = rng.stream(cfg.seed, rng.TRIPLETS)
    n = len(plan.users)
    loss_kind = _UB if cfg.loss == "UB" else _AP
    history = []
    for epoch in range(cfg.epochs):
        idx = gen.integers(0, n, size=n)
        users, items = plan.users[idx], plan.items[idx]
        comps = _draw_comparisons(gen, users, items, data.n_items, plan.purchased)
        arms = plan.arms[idx].copy()
        arms[comps == items] = SKIP
        total, applied, failed = _sgd_epoch(
            pu, qi, users, items, comps, plan.weights[idx], arms,
            cfg.eta, cfg.gamma, cfg.omega, loss_kind, cfg.algorithm1_literal,
        )
        if failed >= 0:
            k = failed
            raise NumericError(
                f"non-finite update in epoch {epoch}, step {k}: u={users[k]}, i={items[k]}, j={comps[k]}, "
                f"weight={plan.weights[idx][k]:.6g}"
            )
        mean_loss = total / applied if applied else 0.0
        entry = EpochLog(epoch + 1, mean_loss)
        if validation is not None:
            entry.validation_metric = validation(MFModel(pu, qi))
        history.append(entry)
        log.debug("epoch %d loss %.6g", epoch + 1, mean_loss)
    return TrainResult(MFModel(pu, qi), history)


def train(data: ObservedDataset, cfg: TrainConfig, n_users: int | None = None, n_items: int | None = None) -> MFModel:
    if (n_users is not None and n_users != data.n_users) or (n_items is not None and n_items != data.n_items):
        raise ParameterError("n_users / n_items disagree with the dataset")
    return fit(data, cfg).model


def train_and_rank(data: ObservedDataset, cfg: TrainConfig) -> RankedList:
    return rank_all(train(data, cfg))


# ---------------------------------------------------------------------------
# non-learned rankers


def popularity_ranker(data: ObservedDataset) -> RankedList:
    """Same ranking for every user: total purchases, descending."""
    counts = np.zeros(data.n_items)
    for r in data.replicates:
        np.add.at(counts, r.items, r.y)
    order = np.argsort(-counts, kind="stable")
    return RankedList(np.tile(order, (data.n_users, 1)))


def random_ranker(n_users: int, n_items: int, seed: int) -> RankedList:
    gen = rng.stream(seed, rng.RANDOM_RANKER)
    return RankedList(gen.permuted(np.tile(np.arange(n_items), (n_users, 1)), axis=1))


def with_capping(cfg: TrainConfig, chi: float) -> TrainConfig:
    return replace(cfg, capping=CappingParams.both(chi))
