"""DALCCO vs DCQO on weak-coupling spin glasses: mean ratio against N and s.

    python scripts/weak_coupling_sweep.py --instances 50 --n 6 8 10 --out results/weak
"""

import argparse
from dataclasses import replace
from pathlib import Path

from lyapcd.experiment import load_config, run_experiment, write_outputs
from lyapcd.report import aggregate, format_table, plot_svg, read_rows

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "weak_sweep.json"


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=str(CONFIG))
    parser.add_argument("--instances", type=int)
    parser.add_argument("--n", type=int, nargs="+")
    parser.add_argument("--steps", type=int, nargs="+")
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out")
    args = parser.parse_args()

    cfg = load_config(args.config)
    overrides = {"instances_per_n": args.instances, "n_list": tuple(args.n) if args.n else None,
                 "steps": tuple(args.steps) if args.steps else None, "kappa": args.kappa, "workers": args.workers}
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    out = Path(args.out or cfg.output_dir)

    path = write_outputs(cfg, run_experiment(cfg), out)
    rows = read_rows(path)
    stats = aggregate(rows)
    by_steps = aggregate(rows, by_steps=True)
    print(format_table(stats))
    print()
    print(format_table(by_steps))
    plot_svg(stats, out / "summary.svg", by_steps)
    print(f"\nresults in {out}")


if __name__ == "__main__":
    main()
