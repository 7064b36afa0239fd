"""Command line: ``run``, ``report`` and ``generate``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiment import ConfigError, load_config, run_experiment, write_outputs
from .problem import generate_instance
from .report import ReportError, aggregate, format_table, plot_svg, read_rows, stats_to_csv


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    out = Path(args.out or cfg.output_dir)
    rows = run_experiment(cfg)
    path = write_outputs(cfg, rows, out)
    failed = sum(1 for r in rows if r.get("error"))
    print(f"wrote {len(rows)} rows to {path}" + (f" ({failed} failed)" if failed else ""))
    return 0


def cmd_report(args) -> int:
    try:
        rows = read_rows(args.input)
        stats = aggregate(rows)
        steps_stats = aggregate(rows, by_steps=True) if args.by_steps else None
    except (ReportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(format_table(stats))
    if steps_stats:
        print()
        print(format_table(steps_stats))
    if args.csv:
        Path(args.csv).write_text(stats_to_csv(steps_stats or stats))
    if args.svg:
        plot_svg(stats, args.svg, steps_stats)
    return 0


def cmd_generate(args) -> int:
    inst = generate_instance(args.n, args.regime, args.kappa, args.seed)
    print(inst.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyapcd", description="Lyapunov-controlled counterdiabatic optimization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an ensemble sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="aggregate a results.csv")
    p.add_argument("--input", required=True)
    p.add_argument("--svg")
    p.add_argument("--csv", help="write the aggregate table as CSV")
    p.add_argument("--by-steps", action="store_true", help="also tabulate mean ratio against s")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("generate", help="print a random instance as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--regime", choices=["weak", "comparable"], default="weak")
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
