"""Causal ranking metrics and their inverse-propensity estimators.

A ranking metric for user ``u`` is ``(1/I) * sum_i lambda(rank_ui) * tau_ui``
where ``tau = Y^T - Y^C``. The estimators replace ``tau`` by a weighted
observed outcome. Capping thresholds of 0 mean "no capping".
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DegenerateInputError,
    GroundTruth,
    ObservedDataset,
    ObservedReplicate,
    OutcomeReplicate,
    ParameterError,
    PropensityError,
    RankedList,
)

_KIND_RE = re.compile(r"^(C?)(AR|DCG|P@(\d+))$")


@dataclass(frozen=True)
class MetricKind:
    """A rank weighting: ``AR``, ``P@k`` or ``DCG``, causal or not.

    The causal flag only changes the name; the weighting is the same and the
    target (``tau`` vs. ``Y``) is chosen by the caller.
    """

    base: str
    k: int | None = None
    causal: bool = True

    def __post_init__(self) -> None:
        if self.base not in ("AR", "P", "DCG"):
            raise ParameterError(f"unknown metric base {self.base!r}")
        if self.base == "P" and (self.k is None or self.k < 1):
            raise ParameterError("precision@k needs k >= 1")

    @classmethod
    def parse(cls, name: str) -> "MetricKind":
        m = _KIND_RE.match(name.strip().upper())
        if not m:
            raise ParameterError(f"unknown metric {name!r}")
        causal = m.group(1) == "C"
        if m.group(3):
            return cls("P", int(m.group(3)), causal)
        return cls(m.group(2), None, causal)

    @property
    def name(self) -> str:
        prefix = "C" if self.causal else ""
        return f"{prefix}P@{self.k}" if self.base == "P" else prefix + self.base

    def __str__(self) -> str:
        return self.name

    def check(self, n_items: int) -> None:
        if self.base == "P" and self.k > n_items:
            raise ParameterError(f"{self.name}: k={self.k} exceeds the number of items {n_items}")


CAR = MetricKind("AR")
CDCG = MetricKind("DCG")


def CP(k: int) -> MetricKind:
    return MetricKind("P", k)


@dataclass(frozen=True)
class CappingParams:
    chi_t: float = 0.0
    chi_c: float = 0.0

    def __post_init__(self) -> None:
        for name in ("chi_t", "chi_c"):
            v = getattr(self, name)
            if not (v == 0.0 or 0.0 < v <= 1.0):
                raise ParameterError(f"{name} must be 0 (off) or in (0, 1], got {v}")

    @classmethod
    def both(cls, chi: float) -> "CappingParams":
        return cls(chi, chi)

    @property
    def off(self) -> bool:
        return self.chi_t == 0.0 and self.chi_c == 0.0


NO_CAP = CappingParams()


def lambda_weights(kind: MetricKind, ranks: np.ndarray, n_items: int) -> np.ndarray:
    """Vectorised rank weighting; ``ranks`` are 1-based."""
    ranks = np.asarray(ranks)
    if ranks.size and (ranks.min() < 1 or ranks.max() > n_items):
        raise ParameterError(f"rank outside [1, {n_items}]")
    kind.check(n_items)
    if kind.base == "AR":
        return -ranks.astype(float)
    if kind.base == "P":
        return np.where(ranks <= kind.k, n_items / kind.k, 0.0)
    return n_items / np.log2(1.0 + ranks)


def lambda_weight(kind: MetricKind, rank: int, n_items: int) -> float:
    return float(lambda_weights(kind, np.asarray([rank]), n_items)[0])


def delta_true(ranks_row: np.ndarray, tau_row: np.ndarray, kind: MetricKind) -> float:
    """Metric of one user from a dense ``tau`` row and that user's ranks."""
    n_items = len(ranks_row)
    lam = lambda_weights(kind, ranks_row, n_items)
    return float(np.dot(lam, np.asarray(tau_row, dtype=float)) / n_items)


def _lambda_table(ranking: RankedList, kind: MetricKind) -> np.ndarray:
    return lambda_weights(kind, ranking.ranks, ranking.n_items)


def per_user_true(ranking: RankedList, truth: OutcomeReplicate, kind: MetricKind) -> np.ndarray:
    lam = _lambda_table(ranking, kind)
    contrib = lam[truth.users, truth.items] * truth.tau
    out = np.zeros(ranking.n_users)
    np.add.at(out, truth.users, contrib)
    return out / ranking.n_items


def metric_average(ranking: RankedList, truth: OutcomeReplicate, kind: MetricKind) -> float:
    """Ground-truth metric averaged over users."""
    lam = _lambda_table(ranking, kind)
    contrib = lam[truth.users, truth.items] * truth.tau
    return float(contrib.sum() / (ranking.n_users * ranking.n_items))


# ---------------------------------------------------------------------------
# per-record causal effect estimates


def naive_rates(obs: ObservedReplicate, n_pairs: int) -> tuple[float, float]:
    """Treated and control fractions ``sum Z / UI`` and ``sum (1-Z) / UI``."""
    n_treated = obs.n_treated
    if n_treated == 0 or n_treated == n_pairs:
        raise DegenerateInputError("naive estimate needs both treated and control pairs")
    return n_treated / n_pairs, (n_pairs - n_treated) / n_pairs


def tau_naive(y, z, treated_rate: float, control_rate: float):
    """``Z*Y/rate_T - (1-Z)*Y/rate_C``; works on scalars or arrays."""
    if treated_rate <= 0 or control_rate <= 0:
        raise DegenerateInputError("naive estimate needs both treated and control pairs")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    out = z * y / treated_rate - (1 - z) * y / control_rate
    return float(out) if out.ndim == 0 else out


def _check_propensity(p: np.ndarray) -> None:
    if p.size and not ((p > 0) & (p < 1)).all():
        raise PropensityError("propensity must lie strictly inside (0, 1)")


def ips_weights(z, p, capping: CappingParams = NO_CAP):
    """Signed inverse-propensity weight of each record.

    ``+1/max(P, chi_t)`` for treated records, ``-1/max(1-P, chi_c)`` for
    control records.
    """
    z = np.asarray(z)
    p = np.asarray(p, dtype=float)
    _check_propensity(p)
    return np.where(z == 1, 1.0 / np.maximum(p, capping.chi_t), -1.0 / np.maximum(1.0 - p, capping.chi_c))


def tau_ips(y, z, p, capping: CappingParams = NO_CAP):
    out = np.asarray(y, dtype=float) * ips_weights(z, p, capping)
    return float(out) if out.ndim == 0 else out


def per_user_estimated(ranking: RankedList, obs: ObservedReplicate, kind: MetricKind, capping: CappingParams = NO_CAP) -> np.ndarray:
    lam = _lambda_table(ranking, kind)
    pos = obs.y == 1
    u, i = obs.users[pos], obs.items[pos]
    contrib = lam[u, i] * tau_ips(obs.y[pos], obs.z[pos], obs.p[pos], capping)
    out = np.zeros(ranking.n_users)
    np.add.at(out, u, contrib)
    return out / ranking.n_items


def delta_estimated(ranks_row: np.ndarray, y, z, p, items, kind: MetricKind, capping: CappingParams = NO_CAP) -> float:
    """IPS estimate of one user's metric from that user's observed records."""
    n_items = len(ranks_row)
    items = np.asarray(items, dtype=np.int64)
    if len(items) == 0:
        return 0.0
    lam = lambda_weights(kind, np.asarray(ranks_row), n_items)[items]
    return float(np.dot(lam, tau_ips(y, z, p, capping)) / n_items)


def estimate_average(ranking: RankedList, obs: ObservedReplicate, kind: MetricKind, capping: CappingParams = NO_CAP) -> float:
    """(Capped) IPS estimate of the user-averaged metric."""
    lam = _lambda_table(ranking, kind)
    pos = obs.y == 1
    contrib = lam[obs.users[pos], obs.items[pos]] * tau_ips(obs.y[pos], obs.z[pos], obs.p[pos], capping)
    return float(contrib.sum() / (ranking.n_users * ranking.n_items))


def estimate_average_naive(ranking: RankedList, obs: ObservedReplicate, kind: MetricKind) -> float:
    n_pairs = ranking.n_users * ranking.n_items
    rate_t, rate_c = naive_rates(obs, n_pairs)
    lam = _lambda_table(ranking, kind)
    pos = obs.y == 1
    contrib = lam[obs.users[pos], obs.items[pos]] * tau_naive(obs.y[pos], obs.z[pos], rate_t, rate_c)
    return float(np.sum(contrib) / n_pairs)


# ---------------------------------------------------------------------------
# closed-form bias and deviation bound


def _dense_outcomes(truth: OutcomeReplicate, shape) -> tuple[np.ndarray, np.ndarray]:
    y_t = np.zeros(shape)
    y_c = np.zeros(shape)
    y_t[truth.users, truth.items] = truth.y_t
    y_c[truth.users, truth.items] = truth.y_c
    return y_t, y_c


def bias_estimated_propensity(truth: OutcomeReplicate, ranking: RankedList, p_true, p_used, kind: MetricKind) -> float:
    """Expected error ``E[R_hat] - R`` of IPS run with propensities ``p_used``.

    The expectation is over treatment assignments drawn from ``p_true``.
    """
    p_true = np.asarray(p_true, dtype=float)
    p_used = np.asarray(p_used, dtype=float)
    lam = _lambda_table(ranking, kind)
    y_t, y_c = _dense_outcomes(truth, lam.shape)
    terms = lam * ((p_true / p_used - 1.0) * y_t - ((1.0 - p_true) / (1.0 - p_used) - 1.0) * y_c)
    return float(terms.sum() / lam.size)


def bias_cips(truth: OutcomeReplicate, ranking: RankedList, p_true, capping: CappingParams, kind: MetricKind) -> float:
    """Expected error ``E[R_capped] - R`` introduced by propensity capping.

    Non-zero only for treated outcomes with ``P < chi_t`` and control
    outcomes with ``1 - P < chi_c``.
    """
    p = np.asarray(p_true, dtype=float)
    lam = _lambda_table(ranking, kind)
    y_t, y_c = _dense_outcomes(truth, lam.shape)
    treat = np.zeros_like(p)
    ctrl = np.zeros_like(p)
    if capping.chi_t > 0:
        low = p < capping.chi_t
        treat[low] = p[low] / capping.chi_t - 1.0
    if capping.chi_c > 0:
        high = p > 1.0 - capping.chi_c
        ctrl[high] = (1.0 - p[high]) / capping.chi_c - 1.0
    return float((lam * (treat * y_t - ctrl * y_c)).sum() / lam.size)


def deviation_ranges(lambdas: np.ndarray, p, capping: CappingParams = NO_CAP) -> np.ndarray:
    """Width of the range each per-pair term can take."""
    p = np.asarray(p, dtype=float)
    return np.abs(lambdas) * (1.0 / np.maximum(p, capping.chi_t) + 1.0 / np.maximum(1.0 - p, capping.chi_c))


def hoeffding_bound(lambdas, p, capping: CappingParams, zeta: float, n_users: int, n_items: int) -> float:
    """Half-width ``eps`` with ``P(|R_hat - E R_hat| >= eps) <= zeta``.

    For capped estimates add ``abs(bias_cips(...))`` to bound the error
    against the true metric.
    """
    if not 0.0 < zeta < 1.0:
        raise ParameterError(f"zeta must lie in (0, 1), got {zeta}")
    d = deviation_ranges(np.asarray(lambdas, dtype=float), p, capping)
    return math.sqrt(math.log(2.0 / zeta) / 2.0) * math.sqrt(float(np.sum(d * d))) / (n_users * n_items)


# ---------------------------------------------------------------------------
# estimator reliability


@dataclass
class EstimatorReport:
    estimates: list[float]
    truths: list[float]
    bound: float | None = None
    bias: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return np.abs(np.asarray(self.estimates) - np.asarray(self.truths))

    @property
    def mae(self) -> float:
        return float(self.errors.mean())

    @property
    def n_replicates(self) -> int:
        return len(self.estimates)


def estimator_mae(
    ranking: RankedList,
    observed: ObservedDataset,
    truth: GroundTruth,
    kind: MetricKind,
    capping: CappingParams = NO_CAP,
) -> EstimatorReport:
    """Mean absolute error of the IPS estimate against each replicate's own truth."""
    if len(observed) == 0:
        raise ParameterError("need at least one replicate")
    if len(observed) != len(truth.replicates):
        raise ParameterError(f"{len(observed)} observed replicates vs {len(truth.replicates)} truth replicates")
    est = [estimate_average(ranking, o, kind, capping) for o in observed.replicates]
    tru = [metric_average(ranking, t, kind) for t in truth.replicates]
    return EstimatorReport(est, tru, meta={"metric": kind.name, "chi_t": capping.chi_t, "chi_c": capping.chi_c})


def capped_error_bound(truth: OutcomeReplicate, ranking: RankedList, p_true, capping: CappingParams, kind: MetricKind, zeta: float) -> float:
    """With probability at least ``1 - zeta``, ``|R_capped - R|`` is below this."""
    lam = _lambda_table(ranking, kind)
    spread = hoeffding_bound(lam, p_true, capping, zeta, ranking.n_users, ranking.n_items)
    return abs(bias_cips(truth, ranking, p_true, capping, kind)) + spread
