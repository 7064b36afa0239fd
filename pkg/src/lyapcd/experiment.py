"""Ensemble sweeps: configuration, per-instance tasks and CSV output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .engine import CdSource, Mode, RunConfig, enhancement_factor, run_dalcco, run_dcqo, run_lc_dcqo
from .lyapunov import ROUNDING_RTOL, FSearchConfig
from .pauli import DEFAULT_CUTOFF
from .cd import BREAKDOWN_TOL
from .problem import Regime, generate_instance, ground_energy
from .statevector import ShotConfig

SCHEMA_VERSION = 1
FEEDBACK_ALGORITHMS = ("dalcco", "lc_dcqo")
COLUMNS = (
    "n", "instance_id", "seed", "algorithm", "s", "dt", "f_star", "accepted", "e0", "final_energy",
    "ratio", "enhancement", "groups_measured", "shots_used", "wall_time_ms", "error",
)


class ConfigError(ValueError):
    """Unusable experiment configuration; the message names the field or JSON position."""


@dataclass(frozen=True)
class ExperimentConfig:
    n_list: tuple[int, ...] = (6,)
    instances_per_n: int = 10
    algorithm: str = "dalcco"
    regime: str = "weak"
    kappa: float = 0.1
    steps: tuple[int, ...] = (5,)
    dt: float = 0.01
    cd_source: str | None = None
    krylov_d: int = 5
    shots: ShotConfig | None = None
    fsearch: FSearchConfig = field(default_factory=FSearchConfig)
    analog_tol: float = 1e-8
    base_seed: int = 0
    workers: int = 1
    output_dir: str = "results"
    record_timing: bool = False

    def resolved_cd_source(self) -> CdSource:
        if self.cd_source is not None:
            return CdSource(self.cd_source)
        return CdSource.LOCAL if self.algorithm == "dalcco" else CdSource.KRYLOV

    def run_config(self, steps: int, mode: Mode, shots: ShotConfig | None = None) -> RunConfig:
        return RunConfig(
            steps=steps, dt=self.dt, mode=mode, cd_source=self.resolved_cd_source(), krylov_d=self.krylov_d,
            shot_mode=shots, fsearch=self.fsearch, analog_tol=self.analog_tol,
        )

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["schema"] = SCHEMA_VERSION
        out["n_list"] = list(self.n_list)
        out["steps"] = list(self.steps)
        return out


def instance_seed(base_seed: int, n: int, index: int) -> int:
    """base_seed XOR a stable 64-bit hash of (n, index)."""
    digest = hashlib.blake2b(f"{n}:{index}".encode(), digest_size=8).digest()
    return (base_seed ^ int.from_bytes(digest, "big")) & ((1 << 64) - 1)


# config parsing ---------------------------------------------------------------


def _int_list(name, value) -> tuple[int, ...]:
    items = value if isinstance(value, list) else [value]
    if not items or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in items):
        raise ConfigError(f"field '{name}': expected a positive integer or a non-empty list of them, got {value!r}")
    return tuple(items)


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    data = dict(data)
    schema = data.pop("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema': unsupported version {schema!r} (expected {SCHEMA_VERSION})")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
    kw = dict(data)
    if "n_list" in kw:
        kw["n_list"] = _int_list("n_list", kw["n_list"])
        if min(kw["n_list"]) < 2:
            raise ConfigError("field 'n_list': every N must be >= 2")
    if "steps" in kw:
        kw["steps"] = _int_list("steps", kw["steps"])
    if kw.get("algorithm", "dalcco") not in FEEDBACK_ALGORITHMS:
        raise ConfigError(f"field 'algorithm': expected one of {FEEDBACK_ALGORITHMS}, got {kw['algorithm']!r}")
    try:
        kw["regime"] = Regime.parse(kw.get("regime", "weak")).value
    except ValueError as exc:
        raise ConfigError(f"field 'regime': {exc}") from None
    if kw.get("cd_source") is not None:
        try:
            CdSource(kw["cd_source"])
        except ValueError:
            raise ConfigError(f"field 'cd_source': expected local_action or krylov_d, got {kw['cd_source']!r}") from None
        if kw.get("algorithm", "dalcco") == "dalcco" and kw["cd_source"] != CdSource.LOCAL.value:
            raise ConfigError("field 'cd_source': dalcco requires local_action")
    for name in ("instances_per_n", "workers", "krylov_d", "base_seed"):
        if name in kw and (not isinstance(kw[name], int) or isinstance(kw[name], bool) or kw[name] < 0):
            raise ConfigError(f"field '{name}': expected a non-negative integer, got {kw[name]!r}")
    if kw.get("workers", 1) < 1:
        raise ConfigError("field 'workers': must be >= 1")
    for name in ("kappa", "dt", "analog_tol"):
        if name in kw and (not isinstance(kw[name], (int, float)) or isinstance(kw[name], bool) or not kw[name] > 0):
            raise ConfigError(f"field '{name}': expected a positive number, got {kw[name]!r}")
    if "kappa" in kw and kw["kappa"] > 1:
        raise ConfigError("field 'kappa': must be <= 1")
    try:
        if kw.get("shots") is not None:
            kw["shots"] = ShotConfig(**kw["shots"])
        if "fsearch" in kw:
            kw["fsearch"] = FSearchConfig(**kw["fsearch"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'shots'/'fsearch': {exc}") from None
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


# tasks -------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_instance(cfg: ExperimentConfig, n: int, index: int) -> list[dict]:
    """Baseline DCQO plus the configured feedback algorithm, for every step count."""
    seed = instance_seed(cfg.base_seed, n, index)
    base = {"n": n, "instance_id": index, "seed": seed, "dt": cfg.dt}
    rows = []
    try:
        inst = generate_instance(n, cfg.regime, cfg.kappa, seed)
        e0, _ = ground_energy(inst)
    except Exception as exc:  # recorded, the sweep continues
        return [dict(base, algorithm=alg, s=s, error=f"{type(exc).__name__}: {exc}")
                for s in cfg.steps for alg in ("dcqo", cfg.algorithm)]
    for s in cfg.steps:
        shots = None
        if cfg.shots is not None:
            shots = ShotConfig(cfg.shots.shots_per_group, (cfg.shots.rng_seed ^ seed ^ s) & ((1 << 64) - 1))
        results = {}
        for alg in ("dcqo", cfg.algorithm):
            row = dict(base, algorithm=alg, s=s, e0=e0)
            start = time.perf_counter()
            try:
                if alg == "dcqo":
                    res = run_dcqo(inst, cfg.run_config(s, Mode.DCQO_IMPULSE, shots), e0)
                elif alg == "dalcco":
                    res = run_dalcco(inst, cfg.run_config(s, Mode.DALCCO, shots), e0)
                else:
                    res = run_lc_dcqo(inst, cfg.run_config(s, Mode.LC_DCQO, shots), e0)
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
                continue
            results[alg] = res
            row.update(
                final_energy=res.final_energy, ratio=res.approximation_ratio,
                groups_measured=res.trace.groups_measured, shots_used=res.trace.shots_used,
            )
            if alg != "dcqo":
                row.update(f_star=res.f_star, accepted=res.accepted)
            if cfg.record_timing:
                row["wall_time_ms"] = round(1000 * (time.perf_counter() - start), 3)
            rows.append(row)
        if "dcqo" in results and cfg.algorithm in results:
            enh = enhancement_factor(results[cfg.algorithm].final_energy, results["dcqo"].final_energy, e0)
            for row in rows:
                if row["algorithm"] == cfg.algorithm and row["s"] == s:
                    row["enhancement"] = enh
    return rows


def _task(args):
    return run_instance(*args)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    """All rows in (N, instance_id, s, algorithm) order, independent of worker count."""
    workers = cfg.workers if workers is None else workers
    tasks = [(cfg, n, i) for n in cfg.n_list for i in range(cfg.instances_per_n)]
    if workers <= 1 or len(tasks) <= 1:
        batches = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_task, tasks))
    order = {"dcqo": 0, cfg.algorithm: 1}
    rows = [row for batch in batches for row in batch]
    rows.sort(key=lambda r: (r["n"], r["instance_id"], r["s"], order[r["algorithm"]]))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in COLUMNS])
    return buf.getvalue()


def metadata(cfg: ExperimentConfig) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "code_version": __version__,
        "schedule": {"kind": "trig", "lambda": "sin^2(pi t / 2T)", "total_time": "steps * dt",
                     "evaluation_times": "t_j = j * dt, j = 1..s"},
        "regime": cfg.regime,
        "kappa": cfg.kappa if cfg.regime == Regime.WEAK.value else 1.0,
        "cd_source": cfg.resolved_cd_source().value,
        "tolerances": {
            "analog_tol": cfg.analog_tol,
            "krylov_breakdown": BREAKDOWN_TOL,
            "pauli_cutoff": DEFAULT_CUTOFF,
            "monotonicity_slack": cfg.fsearch.monotonicity_slack,
            "monotonicity_rounding_rtol": ROUNDING_RTOL,
        },
        "variance_convention": "population (divide by count)",
        "enhancement_guard": "undefined when |E_dcqo| < 1e-9 |E0|",
        "config": cfg.to_json_dict(),
    }


def write_outputs(cfg: ExperimentConfig, rows: list[dict], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    (out / "metadata.json").write_text(json.dumps(metadata(cfg), indent=2, sort_keys=True) + "\n")
    return out / "results.csv"
