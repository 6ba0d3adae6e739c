"""Matrix-factorisation scoring, ranking and checkpoints."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import rng
from .core import MFModel, NumericError, ParameterError, RankedList


@dataclass(frozen=True)
class InitConfig:
    d: int = 200
    scale: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ParameterError("d must be >= 1")
        if self.scale <= 0:
            raise ParameterError("scale must be > 0")


def init_model(cfg: InitConfig, n_users: int, n_items: int) -> MFModel:
    """I.i.d. ``Normal(0, scale^2)`` factors from the model-init stream."""
    gen = rng.stream(cfg.seed, rng.MODEL_INIT)
    pu = gen.normal(0.0, cfg.scale, size=(n_users, cfg.d))
    qi = gen.normal(0.0, cfg.scale, size=(n_items, cfg.d))
    return MFModel(pu, qi)


def score(m: MFModel, u: int, i: int) -> float:
    if not (0 <= u < m.n_users and 0 <= i < m.n_items):
        raise ParameterError(f"index ({u}, {i}) out of range for a {m.n_users}x{m.n_items} model")
    return float(m.user_factors[u] @ m.item_factors[i])


def score_all(m: MFModel) -> np.ndarray:
    return m.user_factors @ m.item_factors.T


def rank_scores(scores: np.ndarray) -> RankedList:
    bad = ~np.isfinite(scores)
    if bad.any():
        u, i = np.argwhere(bad)[0]
        raise NumericError(f"non-finite score at (u={u}, i={i})")
    return RankedList.from_scores(scores)


def rank_all(m: MFModel) -> RankedList:
    """Per-user items by descending score, ties by ascending item index."""
    return rank_scores(score_all(m))


def save_model(m: MFModel, path: str | Path, meta: dict | None = None) -> None:
    """Write ``<path>`` (npz with both factor tables) and ``<path>.json`` meta."""
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, user_factors=m.user_factors, item_factors=m.item_factors)
    info = {"d": m.d, "n_users": m.n_users, "n_items": m.n_items}
    info.update(meta or {})
    path.with_name(path.name + ".json").write_text(json.dumps(info, indent=2, sort_keys=True, default=_jsonable))


def load_model(path: str | Path) -> tuple[MFModel, dict]:
    path = Path(path)
    with np.load(path) as data:
        m = MFModel(data["user_factors"], data["item_factors"])
    meta_path = path.with_name(path.name + ".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return m, meta


def _jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
