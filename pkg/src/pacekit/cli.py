"""Command-line interface.

Subcommands:
  simulate        tuned benchmark batch -> summary.csv, trace.csv
  sweep-init-bid  initial-bid robustness sweep -> sweep.csv
  oracle          hindsight-optimal constant-bid grid search -> oracle.csv
  trace           per-cycle bid trace only -> trace.csv

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .baselines import hindsight_optimal_constant_bid
from .config import ConfigError, load_config
from .harness import (
    SCHEMA_COMMENT,
    emit_trace_csv,
    run_benchmark,
    sweep_initial_bid,
    tuning_seeds,
)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="config file path")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--episodes", type=int, default=None, help="evaluation episodes")
    parser.add_argument(
        "--out", type=Path, default=None, help="output directory (default: out)"
    )
    parser.add_argument(
        "--algos", type=str, default=None, help="comma-separated algorithm list"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pacekit",
        description="MPC bidding benchmark harness on a seeded second-price auction simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "run the tuned benchmark batch and write summary/trace CSVs"),
        ("sweep-init-bid", "run the initial-bid robustness sweep"),
        ("oracle", "grid-search the hindsight-optimal constant bid"),
        ("trace", "write the per-cycle bid trace CSV"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)
    return parser


def _config_from_args(args):
    overrides = {
        "seed": args.seed,
        "episodes": args.episodes,
        "algos": args.algos,
    }
    config = load_config(args.config, overrides)
    out = args.out if args.out is not None else Path(config.out_dir or "out")
    return config, out


def _cmd_simulate(args) -> int:
    config, out = _config_from_args(args)
    bench = run_benchmark(config, out_dir=out)
    for s in bench.summaries:
        cpv = f"{s.cpv_mean:.6g}" if s.cpv_mean is not None else "n/a"
        print(
            f"{s.algorithm:>12}  BUR {s.bur_mean:6.2f}%  "
            f"impressions {s.impressions_mean:10.1f}  CPV {cpv:>10}  "
            f"BV {s.bv_mean:.4g}"
        )
    print(f"wrote {out}/summary.csv, trace.csv, tuned_params.json")
    return 0


def _cmd_sweep(args) -> int:
    config, out = _config_from_args(args)
    rows = sweep_initial_bid(config, out_dir=out)
    for row in rows:
        cpv = f"{row.cpv_mean:.6g}" if row.cpv_mean is not None else "n/a"
        print(
            f"{row.algorithm:>12}  b0 {row.initial_bid:<8g}  "
            f"CPV {cpv:>10}  BUR {row.bur_mean:6.2f}%"
        )
    print(f"wrote {out}/sweep.csv")
    return 0


def _cmd_oracle(args) -> int:
    config, out = _config_from_args(args)
    oracle = hindsight_optimal_constant_bid(
        config.market,
        config.campaign,
        tuning_seeds(config.seed, config.tuning.episodes),
        grid=config.tuning.oracle_grid,
    )
    out.mkdir(parents=True, exist_ok=True)
    with (out / "oracle.csv").open("w", newline="") as fh:
        fh.write(SCHEMA_COMMENT + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bid", "bur_mean", "spend_mean", "cpv_mean"])
        for p in oracle.grid:
            writer.writerow(
                [repr(p.bid), repr(p.mean_bur), repr(p.mean_spend),
                 "" if p.mean_cpv is None else repr(p.mean_cpv)]
            )
    if oracle.budget_binds:
        print(
            f"optimal constant bid {oracle.bid:.6g}  CPV {oracle.cpv:.6g}  "
            f"BUR {oracle.mean_bur:.2f}%  implied dual {oracle.lambda_hat:.6g}"
        )
    else:
        print(f"budget never binds; unconstrained welfare-max bid {oracle.bid:.6g}")
    print(f"wrote {out}/oracle.csv")
    return 0


def _cmd_trace(args) -> int:
    config, out = _config_from_args(args)
    bench = run_benchmark(config, out_dir=None)
    out.mkdir(parents=True, exist_ok=True)
    emit_trace_csv(
        [
            (name, i, r)
            for name in config.algos
            for i, r in enumerate(bench.results[name])
        ],
        out / "trace.csv",
    )
    print(f"wrote {out}/trace.csv")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep-init-bid": _cmd_sweep,
    "oracle": _cmd_oracle,
    "trace": _cmd_trace,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
