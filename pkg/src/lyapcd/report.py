"""Aggregate results.csv into per-N tables and an SVG summary.

Everything here is a pure function of the CSV; no simulation code runs.
Variances use the population convention (divide by the count).
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path


class ReportError(ValueError):
    pass


@dataclass
class GroupStats:
    algorithm: str
    n: int
    s: int
    count: int
    mean_ratio: float
    var_ratio: float
    best_ratio: float
    mean_enhancement: float | None = None
    n_enhancement: int = 0


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ReportError(f"{path}: no result rows")
    return rows


def _mean_var(values: list[float]) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    return mean, math.fsum((v - mean) ** 2 for v in values) / len(values)


def aggregate(rows: list[dict], by_steps: bool = False) -> list[GroupStats]:
    """Per (algorithm, N) statistics at the largest s, or per (algorithm, N, s) when ``by_steps``."""
    ok = [r for r in rows if not r.get("error") and r.get("ratio")]
    if not ok:
        raise ReportError("no successful rows to aggregate")
    if not by_steps:
        max_s = defaultdict(int)
        for r in ok:
            max_s[int(r["n"])] = max(max_s[int(r["n"])], int(r["s"]))
        ok = [r for r in ok if int(r["s"]) == max_s[int(r["n"])]]
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for r in ok:
        groups[(r["algorithm"], int(r["n"]), int(r["s"]))].append(r)
    algorithms = {key[0] for key in groups}
    out = []
    for (alg, n, s), members in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0] != "dcqo", kv[0][0])):
        ratios = [float(r["ratio"]) for r in members]
        mean, var = _mean_var(ratios)
        stats = GroupStats(alg, n, s, len(ratios), mean, var, max(ratios))
        if len(algorithms) > 1:
            enh = [float(r["enhancement"]) for r in members if r.get("enhancement")]
            if enh:
                stats.mean_enhancement = math.fsum(enh) / len(enh)
                stats.n_enhancement = len(enh)
        out.append(stats)
    return out


def stats_to_csv(stats: list[GroupStats]) -> str:
    with_enh = any(s.n_enhancement for s in stats)
    cols = ["algorithm", "n", "s", "count", "mean_ratio", "var_ratio", "best_ratio"]
    if with_enh:
        cols += ["mean_enhancement", "n_enhancement"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(cols)
    for s in stats:
        row = [s.algorithm, s.n, s.s, s.count, repr(s.mean_ratio), repr(s.var_ratio), repr(s.best_ratio)]
        if with_enh:
            row += ["" if s.mean_enhancement is None else repr(s.mean_enhancement), s.n_enhancement]
        writer.writerow(row)
    return buf.getvalue()


def format_table(stats: list[GroupStats]) -> str:
    with_enh = any(s.n_enhancement for s in stats)
    head = f"{'algorithm':<10} {'N':>3} {'s':>3} {'count':>5} {'mean R':>9} {'var R':>9} {'best R':>9}"
    if with_enh:
        head += f" {'mean E':>9}"
    lines = [head]
    for s in stats:
        line = f"{s.algorithm:<10} {s.n:>3} {s.s:>3} {s.count:>5} {s.mean_ratio:>9.4f} {s.var_ratio:>9.4f} {s.best_ratio:>9.4f}"
        if with_enh:
            line += f" {s.mean_enhancement:>9.3f}" if s.mean_enhancement is not None else f" {'-':>9}"
        lines.append(line)
    return "\n".join(lines)


def plot_svg(stats: list[GroupStats], path: str | Path, steps_stats: list[GroupStats] | None = None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "lyapcd"
    panels = 2 if steps_stats else 1
    fig, axes = plt.subplots(1, panels, figsize=(5.5 * panels, 4), squeeze=False)
    ax = axes[0][0]
    for alg in sorted({s.algorithm for s in stats}):
        pts = sorted((s.n, s.mean_ratio, s.var_ratio) for s in stats if s.algorithm == alg)
        ax.errorbar([p[0] for p in pts], [p[1] for p in pts], yerr=[p[2] for p in pts], marker="o", capsize=3,
                    label=alg)
    ax.set_xlabel("N")
    ax.set_ylabel("mean approximation ratio (error bar: variance)")
    ax.legend()
    if steps_stats:
        ax = axes[0][1]
        n_max = max(s.n for s in steps_stats)
        for alg in sorted({s.algorithm for s in steps_stats}):
            pts = sorted((s.s, s.mean_ratio) for s in steps_stats if s.algorithm == alg and s.n == n_max)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=alg)
        ax.set_xlabel("Trotter steps s")
        ax.set_ylabel(f"mean approximation ratio, N={n_max}")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
