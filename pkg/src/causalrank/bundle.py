"""Dataset bundle directory format.

::

    meta.json               config, seed, provenance, split sizes
    mu.csv                  user,item,mu_t,mu_c
    propensity.csv          user,item,p              (assignment propensity)
    propensity_logged.csv   user,item,p              (only if it differs)
    truth_r<k>.csv          user,item,y_t,y_c
    obs_r<k>.csv            user,item,y,z,p_logged

Replicates are numbered across splits in train, validation, test order.
Floats are written with 17 significant digits so a reload is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .core import FormatError, GroundTruth, ObservedDataset, ObservedReplicate, OutcomeReplicate, PropensityModel, Provenance
from .datagen import Bundle, Split

FLOAT_FMT = "%.17g"
SPLITS = ("train", "validation", "test")


def _to_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, float_format=FLOAT_FMT, lineterminator="\n")


def _read_csv(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"missing bundle file {path}")
    return pd.read_csv(path, float_precision="round_trip")


def _dense_frame(**tables: np.ndarray) -> pd.DataFrame:
    first = next(iter(tables.values()))
    users, items = np.indices(first.shape)
    cols = {"user": users.ravel(), "item": items.ravel()}
    cols.update({k: v.ravel() for k, v in tables.items()})
    return pd.DataFrame(cols)


def _dense_table(df: pd.DataFrame, col: str, shape) -> np.ndarray:
    out = np.zeros(shape)
    out[df["user"].to_numpy(), df["item"].to_numpy()] = df[col].to_numpy()
    return out


def save_bundle(b: Bundle, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _to_csv(_dense_frame(mu_t=b.mu_t, mu_c=b.mu_c), out / "mu.csv")
    _to_csv(_dense_frame(p=b.propensity.p), out / "propensity.csv")
    logged_differs = not np.array_equal(b.logged.p, b.propensity.p)
    if logged_differs:
        _to_csv(_dense_frame(p=b.logged.p), out / "propensity_logged.csv")
    k = 0
    for name in SPLITS:
        split: Split = getattr(b, name)
        for truth, obs in zip(split.truth.replicates, split.observed.replicates):
            _to_csv(pd.DataFrame({"user": truth.users, "item": truth.items, "y_t": truth.y_t, "y_c": truth.y_c}), out / f"truth_r{k}.csv")
            _to_csv(pd.DataFrame({"user": obs.users, "item": obs.items, "y": obs.y, "z": obs.z, "p_logged": obs.p}), out / f"obs_r{k}.csv")
            k += 1
    meta = dict(b.meta)
    meta.update(
        n_users=b.shape[0],
        n_items=b.shape[1],
        n_replicates=k,
        provenance=b.propensity.provenance.to_dict(),
        logged_provenance=b.logged.provenance.to_dict(),
        logged_file=logged_differs,
    )
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def load_bundle(path: str | Path) -> Bundle:
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{root} is not a bundle (no meta.json)")
    meta = json.loads(meta_path.read_text())
    try:
        shape = (int(meta["n_users"]), int(meta["n_items"]))
        sizes = [int(meta["splits"][s]) for s in SPLITS]
    except KeyError as exc:
        raise FormatError(f"meta.json lacks {exc}") from None
    mu = _read_csv(root / "mu.csv")
    mu_t, mu_c = _dense_table(mu, "mu_t", shape), _dense_table(mu, "mu_c", shape)
    prop = PropensityModel(_dense_table(_read_csv(root / "propensity.csv"), "p", shape), Provenance.from_dict(meta["provenance"]))
    if meta.get("logged_file"):
        logged = PropensityModel(
            _dense_table(_read_csv(root / "propensity_logged.csv"), "p", shape), Provenance.from_dict(meta["logged_provenance"])
        )
    else:
        logged = prop
    splits = []
    k = 0
    for n in sizes:
        truths, obs = [], []
        for _ in range(n):
            t = _read_csv(root / f"truth_r{k}.csv")
            o = _read_csv(root / f"obs_r{k}.csv")
            truths.append(OutcomeReplicate(t["user"].to_numpy(), t["item"].to_numpy(), t["y_t"].to_numpy(), t["y_c"].to_numpy()))
            obs.append(ObservedReplicate(o["user"].to_numpy(), o["item"].to_numpy(), o["y"].to_numpy(), o["z"].to_numpy(), o["p_logged"].to_numpy()))
            k += 1
        splits.append(Split(GroundTruth(mu_t, mu_c, tuple(truths)), ObservedDataset(tuple(obs), *shape)))
    return Bundle(mu_t, mu_c, prop, logged, *splits, meta=meta)
