"""Command line entry point: ``causalrank <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import exp, metrics
from .bundle import load_bundle, save_bundle
from .core import CausalRankError
from .metrics import CappingParams, MetricKind
from .models import load_model, rank_all, save_model
from .train import TrainConfig, fit


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def cmd_gen(args) -> int:
    dataset = _load_json(args.config)
    if args.log:
        dataset = {k: v for k, v in dataset.items() if k != "synthetic"}
        dataset["log"] = args.log
    if "synthetic" not in dataset and "log" not in dataset:
        raise CausalRankError("gen config needs a 'synthetic' section or a 'log' path")
    seed = args.seed if args.seed is not None else dataset.get("gen", {}).get("seed", 0)
    bundle = exp.materialize(dataset, seed)
    out = save_bundle(bundle, args.out)
    print(f"wrote bundle to {out} ({bundle.shape[0]} users, {bundle.shape[1]} items, mean P {bundle.propensity.mean:.4g})")
    return 0


def cmd_train(args) -> int:
    bundle = load_bundle(args.bundle)
    cfg_dict = _load_json(args.config) if args.config else {}
    if args.algorithm1_literal:
        cfg_dict["algorithm1_literal"] = True
    cfg = TrainConfig(**cfg_dict)
    kind = MetricKind.parse(args.metric)
    val = bundle.validation.truth.replicates

    def validation(model):
        rk = rank_all(model)
        return sum(metrics.metric_average(rk, t, kind) for t in val) / len(val)

    result = fit(bundle.train.observed, cfg, validation=validation)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(result.model, out / "model.npz", {"seed": cfg.seed, "trainer": cfg.method, "config": asdict(cfg)})
    result.write_log(out / "train_log.csv")
    (out / "meta.json").write_text(json.dumps({"command": "train", "bundle": str(args.bundle), "config": asdict(cfg)}, indent=2, sort_keys=True) + "\n")
    last = result.history[-1].validation_metric if result.history else None
    print(f"trained {cfg.method} for {cfg.epochs} epochs; validation {kind.name} = {last}")
    return 0


def cmd_eval(args) -> int:
    bundle = load_bundle(args.bundle)
    model, meta = load_model(args.model)
    rk = rank_all(model)
    name = meta.get("trainer", "model")
    rows, mae_rows = [], []
    for m in args.metrics:
        kind = MetricKind.parse(m)
        vals = exp.score_on_test(rk, bundle.test, kind)
        mean, std = exp._summary(vals)
        rows.append(exp.Row(name, kind.name, mean, std, None, None, int(meta.get("seed", 0)), tuple(vals)))
        for chi in args.capping:
            rep = metrics.estimator_mae(rk, bundle.test.observed, bundle.test.truth, kind, CappingParams.both(chi))
            mae_rows.append(exp.MAERow(name, kind.name, chi, rep.mae, int(meta.get("seed", 0)), tuple(float(e) for e in rep.errors)))
    out = Path(args.out)
    exp.emit_report(exp.MetricReport(rows, "comparison"), out)
    if mae_rows:
        exp.emit_report(exp.MetricReport(mae_rows, "mae"), out, stem="estimates")
    (out / "meta.json").write_text(json.dumps({"command": "eval", "bundle": str(args.bundle), "model": str(args.model)}, indent=2, sort_keys=True) + "\n")
    for r in rows:
        print(f"{r.metric}: {r.mean:.6g} +- {r.std:.3g}")
    return 0


def cmd_plan(args) -> int:
    plan = exp.ExperimentPlan.from_file(args.plan)
    out = Path(args.out or plan.output_dir)
    runner = exp.RUNNERS[args.command]
    report = runner(plan) if args.command == "compare" else runner(plan, args.values)
    exp.write_run_meta(out, plan, args.command, {"values": args.values})
    for path in exp.emit_report(report, out):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalrank", description="Estimate, learn and compare rankings by the causal effect of recommending.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="build a dataset bundle from a base log or a synthetic config")
    g.add_argument("--config", required=True, help="JSON with 'gen' and 'synthetic' (or 'log') sections")
    g.add_argument("--log", help="base log CSV (user_id,item_id,week,y,z); overrides the config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train one model on a bundle")
    t.add_argument("--bundle", required=True)
    t.add_argument("--config", help="JSON with TrainConfig keys")
    t.add_argument("--metric", default="CDCG", help="validation metric logged per epoch")
    t.add_argument("--algorithm1-literal", action="store_true", help="use the surrogate exponents of the pseudo-code listing")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a trained model on the test replicates")
    e.add_argument("--bundle", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--metrics", nargs="+", default=["CP@10", "CDCG", "CAR"])
    e.add_argument("--capping", nargs="*", type=float, default=[0.0], help="estimator capping thresholds for the MAE table")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    for name, help_ in (
        ("compare", "tune and compare all methods"),
        ("sweep-capping", "DLCE performance per capping threshold"),
        ("sweep-beta", "comparison per propensity unevenness beta"),
        ("sweep-xi", "comparison per propensity misspecification xi"),
        ("estimate", "MAE of the IPS estimators per capping threshold"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--plan", required=True, help="JSON with ExperimentPlan keys")
        s.add_argument("--out", help="run directory (default: plan output_dir)")
        if name != "compare":
            s.add_argument("--values", nargs="+", type=float, help="sweep values (default: plan sweep_values)")
        s.set_defaults(func=cmd_plan, values=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CausalRankError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
