"""Domain types shared by the data generator, estimators and trainers.

Users and items are dense integer indices. Outcome tables are stored
sparsely (only pairs with a positive potential outcome); propensities are
stored densely because every pair needs one during generation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

CLIP_LOW = 1e-6
CLIP_HIGH = 1.0 - 1e-6


class CausalRankError(Exception):
    """Base class for all package errors."""


class StructuralError(CausalRankError):
    """Shapes or index ranges disagree between objects."""


class FormatError(CausalRankError):
    """Input file is missing columns or is otherwise malformed."""


class DegenerateInputError(CausalRankError):
    """Input is well formed but too empty to work with."""


class ParameterError(CausalRankError, ValueError):
    """A numeric parameter is outside its valid range."""


class PropensityError(ParameterError):
    """A propensity lies outside the open unit interval."""


class NumericError(CausalRankError, ArithmeticError):
    """A computation produced a non-finite value."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class InteractionLog:
    """Weekly purchase (``y``) / recommendation (``z``) log on dense indices.

    ``user_ids``, ``item_ids`` and ``weeks`` map dense indices back to the
    external identifiers of the source file.
    """

    users: np.ndarray
    items: np.ndarray
    weeks: np.ndarray
    y: np.ndarray
    z: np.ndarray
    n_users: int
    n_items: int
    n_weeks: int
    user_ids: tuple = ()
    item_ids: tuple = ()
    week_ids: tuple = ()

    def __post_init__(self) -> None:
        cols = {}
        for name in ("users", "items", "weeks", "y", "z"):
            cols[name] = _readonly(np.asarray(getattr(self, name), dtype=np.int64))
            object.__setattr__(self, name, cols[name])
        n = len(self.users)
        if any(len(c) != n for c in cols.values()):
            raise StructuralError("log columns have different lengths")
        for name, bound in (("users", self.n_users), ("items", self.n_items), ("weeks", self.n_weeks)):
            c = cols[name]
            if n and (c.min() < 0 or c.max() >= bound):
                raise StructuralError(f"{name} index out of range [0, {bound})")
        for name in ("y", "z"):
            if n and not np.isin(cols[name], (0, 1)).all():
                raise FormatError(f"column {name} must be binary")
        key = (self.users * self.n_items + self.items) * self.n_weeks + self.weeks
        if len(np.unique(key)) != n:
            raise FormatError("duplicate (user, item, week) triple")

    def __len__(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class OutcomeReplicate:
    """One sampled replicate of the potential outcomes, sparse.

    Only pairs where ``y_t`` or ``y_c`` is 1 are stored.
    """

    users: np.ndarray
    items: np.ndarray
    y_t: np.ndarray
    y_c: np.ndarray

    def __post_init__(self) -> None:
        for name in ("users", "items"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=np.int64)))
        for name in ("y_t", "y_c"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=np.int8)))

    @property
    def tau(self) -> np.ndarray:
        return (self.y_t - self.y_c).astype(np.int8)

    def __len__(self) -> int:
        return len(self.users)

    def dense_tau(self, n_users: int, n_items: int) -> np.ndarray:
        out = np.zeros((n_users, n_items), dtype=np.int8)
        out[self.users, self.items] = self.tau
        return out


@dataclass(frozen=True)
class GroundTruth:
    """Outcome probabilities plus sampled potential outcomes per replicate."""

    mu_t: np.ndarray
    mu_c: np.ndarray
    replicates: tuple[OutcomeReplicate, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu_t", _readonly(np.asarray(self.mu_t, dtype=float)))
        object.__setattr__(self, "mu_c", _readonly(np.asarray(self.mu_c, dtype=float)))
        object.__setattr__(self, "replicates", tuple(self.replicates))
        if self.mu_t.shape != self.mu_c.shape or self.mu_t.ndim != 2:
            raise StructuralError(f"mu_t {self.mu_t.shape} and mu_c {self.mu_c.shape} must be equal 2-d shapes")

    @property
    def shape(self) -> tuple[int, int]:
        return self.mu_t.shape

    def subset(self, idx) -> "GroundTruth":
        return GroundTruth(self.mu_t, self.mu_c, tuple(self.replicates[k] for k in idx))


@dataclass(frozen=True)
class Provenance:
    """Where a propensity table came from.

    ``kind`` is one of ``original``, ``personalized``, ``misspecified`` or
    ``synthetic``; ``beta`` and ``xi`` are set for the latter two kinds and
    ``base`` points to the table a misspecified one was derived from.
    """

    kind: str
    beta: float | None = None
    xi: float | None = None
    base: "Provenance | None" = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.beta is not None:
            d["beta"] = self.beta
        if self.xi is not None:
            d["xi"] = self.xi
        if self.base is not None:
            d["base"] = self.base.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Provenance":
        base = cls.from_dict(d["base"]) if d.get("base") else None
        return cls(d["kind"], d.get("beta"), d.get("xi"), base)


@dataclass(frozen=True)
class PropensityModel:
    p: np.ndarray
    provenance: Provenance = field(default_factory=lambda: Provenance("original"))

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2:
            raise StructuralError("propensity table must be 2-d")
        object.__setattr__(self, "p", _readonly(p))

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    @property
    def mean(self) -> float:
        return float(self.p.mean())


@dataclass(frozen=True)
class ObservedReplicate:
    """Training-visible records of one replicate.

    Every pair with ``y == 1`` or ``z == 1`` is stored, so the number of
    treated pairs (needed by the naive estimator) is ``z.sum()``.
    """

    users: np.ndarray
    items: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        for name in ("users", "items"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=np.int64)))
        for name in ("y", "z"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=np.int8)))
        object.__setattr__(self, "p", _readonly(np.asarray(self.p, dtype=float)))
        n = len(self.users)
        if any(len(getattr(self, c)) != n for c in ("items", "y", "z", "p")):
            raise StructuralError("observed columns have different lengths")

    def __len__(self) -> int:
        return len(self.users)

    @property
    def n_treated(self) -> int:
        return int(self.z.sum())

    def with_propensity(self, p: np.ndarray) -> "ObservedReplicate":
        return ObservedReplicate(self.users, self.items, self.y, self.z, np.asarray(p)[self.users, self.items])


@dataclass(frozen=True)
class ObservedDataset:
    replicates: tuple[ObservedReplicate, ...]
    n_users: int
    n_items: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "replicates", tuple(self.replicates))
        for r in self.replicates:
            if len(r) and (r.users.max() >= self.n_users or r.items.max() >= self.n_items):
                raise StructuralError("observed record index out of range")

    def __len__(self) -> int:
        return len(self.replicates)

    def subset(self, idx) -> "ObservedDataset":
        return ObservedDataset(tuple(self.replicates[k] for k in idx), self.n_users, self.n_items)

    def with_propensity(self, pm: PropensityModel) -> "ObservedDataset":
        """Same records, logged propensity replaced by ``pm``."""
        return ObservedDataset(tuple(r.with_propensity(pm.p) for r in self.replicates), self.n_users, self.n_items)

    def concatenated(self) -> ObservedReplicate:
        reps = self.replicates
        if not reps:
            return ObservedReplicate(*(np.empty(0) for _ in range(5)))
        return ObservedReplicate(*(np.concatenate([getattr(r, c) for r in reps]) for c in ("users", "items", "y", "z", "p")))


@dataclass(frozen=True)
class MFModel:
    """Latent factor tables; the score of (u, i) is ``user_factors[u] @ item_factors[i]``."""

    user_factors: np.ndarray
    item_factors: np.ndarray

    def __post_init__(self) -> None:
        pu = np.asarray(self.user_factors, dtype=float)
        qi = np.asarray(self.item_factors, dtype=float)
        if pu.ndim != 2 or qi.ndim != 2 or pu.shape[1] != qi.shape[1]:
            raise StructuralError(f"factor shapes {pu.shape} and {qi.shape} disagree")
        if pu.shape[1] < 1:
            raise ParameterError("latent dimension must be >= 1")
        if not (np.isfinite(pu).all() and np.isfinite(qi).all()):
            raise NumericError("model contains non-finite entries")
        object.__setattr__(self, "user_factors", pu)
        object.__setattr__(self, "item_factors", qi)

    @property
    def d(self) -> int:
        return self.user_factors.shape[1]

    @property
    def n_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def n_items(self) -> int:
        return self.item_factors.shape[0]

    def copy(self) -> "MFModel":
        return MFModel(self.user_factors.copy(), self.item_factors.copy())


@dataclass(frozen=True)
class RankedList:
    """Per-user item orderings.

    ``order[u, k]`` is the item at position ``k`` (0-based) and
    ``ranks[u, i]`` the 1-based position of item ``i``.
    """

    order: np.ndarray

    def __post_init__(self) -> None:
        order = np.asarray(self.order, dtype=np.int64)
        if order.ndim != 2:
            raise StructuralError("ranking must be a 2-d array")
        n_items = order.shape[1]
        if not (np.sort(order, axis=1) == np.arange(n_items)).all():
            raise StructuralError("each ranking row must be a permutation of the items")
        object.__setattr__(self, "order", _readonly(order))

    @property
    def n_users(self) -> int:
        return self.order.shape[0]

    @property
    def n_items(self) -> int:
        return self.order.shape[1]

    @property
    def ranks(self) -> np.ndarray:
        ranks = np.empty_like(self.order)
        rows = np.arange(self.n_users)[:, None]
        ranks[rows, self.order] = np.arange(1, self.n_items + 1)
        return ranks

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "RankedList":
        """Descending score, ties broken by ascending item index."""
        scores = np.asarray(scores, dtype=float)
        return cls(np.argsort(-scores, axis=1, kind="stable"))


def validate_dataset(d: ObservedDataset, g: GroundTruth, pm: PropensityModel) -> list[str]:
    """Check an observed dataset against the truth that generated it.

    Raises :class:`StructuralError` if the shapes disagree; otherwise returns
    a list of human-readable invariant violations (empty when consistent).
    """
    n_users, n_items = g.shape
    if pm.shape[0] != n_users or d.n_users != n_users:
        raise StructuralError(f"user dimension mismatch: truth {n_users}, propensity {pm.shape[0]}, observed {d.n_users}")
    if pm.shape[1] != n_items or d.n_items != n_items:
        raise StructuralError(f"item dimension mismatch: truth {n_items}, propensity {pm.shape[1]}, observed {d.n_items}")
    if len(d) != len(g.replicates):
        raise StructuralError(f"replicate dimension mismatch: observed {len(d)}, truth {len(g.replicates)}")

    problems: list[str] = []
    if not ((g.mu_t >= 0) & (g.mu_t <= 1)).all() or not ((g.mu_c >= 0) & (g.mu_c <= 1)).all():
        problems.append("outcome probability outside [0, 1]")
    if (pm.p < CLIP_LOW).any():
        problems.append("propensity below clip floor")
    if (pm.p > CLIP_HIGH).any():
        problems.append("propensity above clip ceiling")

    for r, (obs, truth) in enumerate(zip(d.replicates, g.replicates)):
        y_t = np.zeros((n_users, n_items), dtype=np.int8)
        y_c = np.zeros((n_users, n_items), dtype=np.int8)
        y_t[truth.users, truth.items] = truth.y_t
        y_c[truth.users, truth.items] = truth.y_c
        z = np.zeros((n_users, n_items), dtype=np.int8)
        z[obs.users, obs.items] = obs.z
        y_obs = np.zeros((n_users, n_items), dtype=np.int8)
        y_obs[obs.users, obs.items] = obs.y
        expected = z * y_t + (1 - z) * y_c
        for u, i in zip(*np.nonzero(expected != y_obs)):
            problems.append(f"observed outcome mismatch at ({u},{i})" + (f" in replicate {r}" if len(d) > 1 else ""))
        tau = truth.tau
        if len(tau) and not np.isin(tau, (-1, 0, 1)).all():
            problems.append(f"tau outside {{-1,0,1}} in replicate {r}")
        if len(truth) and ((truth.y_t == 0) & (truth.y_c == 0)).any():
            problems.append(f"all-zero pair stored in truth replicate {r}")
    return problems
