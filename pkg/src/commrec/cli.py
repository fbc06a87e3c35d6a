"""Command-line entry point: ``commrec run | gen | validate-plan | score``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from commrec.datagen import SynthSpec, generate
from commrec.fixtures import feeder_spec
from commrec.measurements import read_mask, read_measurements, write_measurements
from commrec.metrics import score
from commrec.network import LdstPlan, check_plan


def _cmd_run(args) -> int:
    from commrec.pipeline import RunConfig, run_experiment

    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "output_dir": args.out,
        "workers": args.workers,
        "methods": args.methods.split(",") if args.methods else None,
        "no_failures": True if args.no_failures else None,
        "export_series": args.export_series or None,
    }
    config = RunConfig.from_file(args.config, **overrides)
    report = run_experiment(config)
    d = report.to_dict()
    for method in report.methods:
        c = d["combined"][method]
        if c is None:
            print(f"{method:10s} no missing entries")
        else:
            print(f"{method:10s} MAE={c['mae']:.6g} RMSE={c['rmse']:.6g} MAPE={c['mape']:.4g}% "
                  f"(n={c['n_missing']})")
    for base, entry in d["improvement_pct"].items():
        print(f"improvement vs {base}: MAE {entry['pooled']['mae']:.2f}% (pooled), "
              f"{entry['cluster_mean']['mae']:.2f}% (cluster mean)")
    for notice in d["meta"]["notices"]:
        print(f"notice: {notice}")
    print(f"artifacts written to {config.output_dir}")
    return 0


def _cmd_gen(args) -> int:
    if args.spec:
        spec = SynthSpec.from_file(args.spec)
    else:
        spec = feeder_spec()
    if args.seed is not None:
        spec.seed = args.seed
    block = generate(spec)
    write_measurements(args.out, block)
    print(f"wrote {block.horizon} x {len(block.sensors)} measurements to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    try:
        plan = LdstPlan.load(args.plan)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"cannot read plan: {exc}", file=sys.stderr)
        return 2
    if args.alpha is not None:
        plan.alpha = {k: args.alpha for k in set(plan.clusters.values())}
    problems = check_plan(plan)
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return 1
    print(f"OK {plan.tree_count} trees, {len(plan.assignment)} sensors")
    return 0


def _cmd_score(args) -> int:
    truth = read_measurements(args.truth)
    recovered = read_measurements(args.recovered).select(truth.sensors)
    mask = read_mask(args.mask).select(truth.sensors)
    result = score(truth, recovered, mask)
    print(json.dumps(result.as_dict(), indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="commrec", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the Monte Carlo recovery experiment")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--methods", help="comma-separated subset of proposed,baseline1,baseline2")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes (default: $COMMREC_WORKERS or 1)")
    p.add_argument("--no-failures", action="store_true", help="inject no link failures")
    p.add_argument("--export-series", action="append", metavar="SENSOR",
                   help="write truth/reported/recovered CSV for a sensor (repeatable)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen", help="generate a synthetic measurement CSV")
    p.add_argument("--spec", type=Path, help="JSON synthetic spec (default: feeder voltage fixture)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("validate-plan", help="re-check the invariants of an exported routing plan")
    p.add_argument("plan", type=Path)
    p.add_argument("--alpha", type=float, help="check the spreading cap at this alpha instead")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("score", help="MAE/RMSE/MAPE over the missing entries of a mask")
    p.add_argument("--truth", required=True, type=Path)
    p.add_argument("--recovered", required=True, type=Path)
    p.add_argument("--mask", required=True, type=Path)
    p.set_defaults(func=_cmd_score)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
