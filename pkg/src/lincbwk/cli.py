"""Command-line entry point.

Subcommands:
  run       --config PATH [--out DIR] [--seed N]
  sweep     --config PATH --axis T --values 4096,16384,65536 [--out DIR]
  oracle    --config PATH            (prints the oracle OPT)
  baseline  --name NAME --config PATH [--out DIR] [--seed N]
  report    --dir DIR [--out DIR]    (renders figures next to the CSV output)

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
LINCBWK_THREADS caps episode-level parallelism.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness
from .errors import ConfigError, LpNumericsError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lincbwk",
        description="Budget-constrained linear contextual bandit experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="run an experiment across one axis")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=["T", "B", "m"])
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--out", default=None)

    p_oracle = sub.add_parser("oracle", help="print the oracle OPT for a config")
    p_oracle.add_argument("--config", required=True)

    p_base = sub.add_parser("baseline", help="run a named baseline policy")
    p_base.add_argument("--name", required=True, choices=list(harness.BASELINES))
    p_base.add_argument("--config", required=True)
    p_base.add_argument("--out", default=None)
    p_base.add_argument("--seed", type=int, default=None)

    p_report = sub.add_parser("report", help="render figures from an output directory")
    p_report.add_argument("--dir", required=True)
    p_report.add_argument("--out", default=None)
    return parser


def _axis_values(axis: str, text: str) -> list:
    try:
        return [int(v) if axis in ("T", "m") else float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values: {exc}") from exc


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = harness.parse_config(args.config)
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            summary = harness.run(config, out_dir=args.out)
            reg = summary.aggregate["regret"]
            print(
                f"opt={summary.opt:.9g} median_regret={reg['median']:.9g} "
                f"q1={reg['q1']:.9g} q3={reg['q3']:.9g} repeats={config.repeats}"
            )
        elif args.command == "sweep":
            config = harness.parse_config(args.config)
            values = _axis_values(args.axis, args.values)
            if not values:
                raise ConfigError("sweep needs at least one axis value")
            summaries = harness.sweep(config, args.axis, values, out_dir=args.out)
            for value, summary in zip(values, summaries):
                print(
                    f"{args.axis}={value} opt={summary.opt:.9g} "
                    f"median_regret={summary.aggregate['regret']['median']:.9g}"
                )
        elif args.command == "oracle":
            config = harness.parse_config(args.config)
            print(f"{harness.oracle_for_config(config).value:.9g}")
        elif args.command == "baseline":
            config = harness.parse_config(args.config)
            config = replace(config, algo=args.name)
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            summary = harness.run(config, out_dir=args.out)
            print(
                f"baseline={args.name} opt={summary.opt:.9g} "
                f"median_reward={summary.aggregate['total_reward']['median']:.9g}"
            )
        elif args.command == "report":
            from . import report

            written = report.render(args.dir, out_dir=args.out)
            for path in written:
                print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LpNumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
