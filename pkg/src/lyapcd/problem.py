"""Random all-to-all Ising spin glasses and the interpolation schedule."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .pauli import PauliOperator, pauli_string

EXHAUSTIVE_LIMIT = 24
_CHUNK_BITS = 20


class Regime(str, Enum):
    WEAK = "weak_coupling"
    COMPARABLE = "comparable"

    @classmethod
    def parse(cls, value: str | Regime) -> Regime:
        if isinstance(value, Regime):
            return value
        aliases = {"weak": cls.WEAK, "weak_coupling": cls.WEAK, "comparable": cls.COMPARABLE}
        try:
            return aliases[value]
        except KeyError:
            raise ValueError(f"unknown regime {value!r}; expected weak or comparable") from None


class SizeError(ValueError):
    """Instance too large for exhaustive ground-state search."""


@dataclass(frozen=True, eq=True)
class SpinGlassInstance:
    """H_p = sum_{m<n} J_mn Z_m Z_n + sum_l h_l Z_l on ``n_qubits`` spins."""

    n_qubits: int
    couplings: dict[tuple[int, int], float]
    fields: tuple[float, ...]
    regime: Regime = Regime.COMPARABLE
    seed: int | None = None
    kappa: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if len(self.fields) != self.n_qubits:
            raise ValueError(f"{len(self.fields)} fields for {self.n_qubits} qubits")
        for m, n in self.couplings:
            if not 0 <= m < n < self.n_qubits:
                raise ValueError(f"coupling index ({m}, {n}) must satisfy 0 <= m < n < N")
        object.__setattr__(self, "fields", tuple(float(h) for h in self.fields))
        object.__setattr__(self, "regime", Regime.parse(self.regime))

    __hash__ = None

    @classmethod
    def from_arrays(cls, fields, couplings=None, **kw) -> SpinGlassInstance:
        """``couplings`` may be a dense (symmetric or upper-triangular) matrix or a dict."""
        fields = tuple(float(h) for h in fields)
        n = len(fields)
        if couplings is None:
            pairs = {}
        elif isinstance(couplings, dict):
            pairs = {(int(m), int(k)): float(v) for (m, k), v in couplings.items()}
        else:
            mat = np.asarray(couplings, dtype=float)
            pairs = {(m, k): float(mat[m, k]) for m in range(n) for k in range(m + 1, n)}
        return cls(n, pairs, fields, **kw)

    def coupling_matrix(self) -> np.ndarray:
        """Upper-triangular J with zeros elsewhere."""
        mat = np.zeros((self.n_qubits, self.n_qubits))
        for (m, n), v in self.couplings.items():
            mat[m, n] = v
        return mat

    def field_sum(self) -> float:
        return math.fsum(self.fields)

    def field_sq_sum(self) -> float:
        return math.fsum(h * h for h in self.fields)

    def coupling_sq_sum(self) -> float:
        return math.fsum(v * v for v in self.couplings.values())

    def energy(self, bits: str) -> float:
        """Classical energy of a bitstring (qubit 0 first, spin +1 for bit 0)."""
        s = [1 - 2 * int(b) for b in bits]
        return math.fsum(
            [v * s[m] * s[n] for (m, n), v in self.couplings.items()] + [h * s[l] for l, h in enumerate(self.fields)]
        )

    # JSON ---------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n_qubits,
            "h": list(self.fields),
            "J": [[m, n, v] for (m, n), v in sorted(self.couplings.items())],
            "regime": self.regime.value,
            "seed": self.seed,
            "kappa": self.kappa,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict) -> SpinGlassInstance:
        pairs = {(int(m), int(n)): float(v) for m, n, v in data.get("J", [])}
        return cls(int(data["n"]), pairs, tuple(data["h"]), Regime.parse(data.get("regime", "comparable")),
                   data.get("seed"), float(data.get("kappa", 1.0)))

    @classmethod
    def from_json(cls, text: str) -> SpinGlassInstance:
        return cls.from_json_dict(json.loads(text))


def generate_instance(
    n_qubits: int,
    regime: Regime | str = Regime.WEAK,
    coupling_scale: float = 0.1,
    rng_seed: int = 0,
) -> SpinGlassInstance:
    """Draw h_l and J_mn uniformly from [-1, 1]; J is scaled by ``coupling_scale`` when weak.

    Fields are drawn first, then couplings in (m, n) lexicographic order, from
    a private generator seeded with ``rng_seed``.
    """
    regime = Regime.parse(regime)
    if n_qubits < 2:
        raise ValueError("n_qubits must be >= 2")
    if not 0 < coupling_scale <= 1:
        raise ValueError("coupling_scale must be in (0, 1]")
    kappa = coupling_scale if regime is Regime.WEAK else 1.0
    rng = np.random.default_rng(rng_seed)
    h = rng.uniform(-1.0, 1.0, size=n_qubits)
    pairs = [(m, n) for m in range(n_qubits) for n in range(m + 1, n_qubits)]
    j = rng.uniform(-1.0, 1.0, size=len(pairs)) * kappa
    return SpinGlassInstance(
        n_qubits,
        {p: float(v) for p, v in zip(pairs, j)},
        tuple(float(v) for v in h),
        regime,
        int(rng_seed),
        kappa,
    )


def hp_operator(instance: SpinGlassInstance) -> PauliOperator:
    n = instance.n_qubits
    terms = [(pauli_string(n, {l: "Z"}), h) for l, h in enumerate(instance.fields)]
    terms += [(pauli_string(n, {m: "Z", k: "Z"}), v) for (m, k), v in instance.couplings.items()]
    return PauliOperator.from_terms(n, terms)


def hm_operator(instance_or_n: SpinGlassInstance | int) -> PauliOperator:
    """Mixer -sum_i X_i."""
    n = instance_or_n if isinstance(instance_or_n, int) else instance_or_n.n_qubits
    return PauliOperator.from_terms(n, [(pauli_string(n, {i: "X"}), -1.0) for i in range(n)])


def classical_energies(instance: SpinGlassInstance, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Diagonal of H_p over basis indices ``start..stop``."""
    n = instance.n_qubits
    stop = (1 << n) if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    spins = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))) & 1)
    energy = spins @ np.asarray(instance.fields)
    for (m, k), v in instance.couplings.items():
        energy += v * spins[:, m] * spins[:, k]
    return energy


def ground_energy(instance: SpinGlassInstance, limit: int = EXHAUSTIVE_LIMIT) -> tuple[float, str]:
    """Exact ground energy by exhaustive scan; ties go to the smallest basis index."""
    n = instance.n_qubits
    if n > limit:
        raise SizeError(f"exhaustive search refused for {n} > {limit} spins")
    best, best_idx = math.inf, -1
    chunk = 1 << min(n, _CHUNK_BITS)
    for start in range(0, 1 << n, chunk):
        e = classical_energies(instance, start, start + chunk)
        i = int(np.argmin(e))
        if e[i] < best:
            best, best_idx = float(e[i]), start + i
    bits = format(best_idx, f"0{n}b")
    # re-sum in operator term order so E0 equals <z_min|H_p|z_min> bit for bit
    hp = hp_operator(instance)
    e0 = 0j
    for z, c in zip(hp.zs.tolist(), hp.coeffs.tolist()):
        e0 += c * (1.0 - 2.0 * ((best_idx & z).bit_count() & 1))
    return e0.real, bits


@dataclass(frozen=True)
class Schedule:
    """lambda(t) = sin^2(pi t / 2T) on [0, T]."""

    total_time: float
    kind: str = "trig"
    _range_slack: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")
        if self.kind != "trig":
            raise ValueError(f"unsupported schedule kind {self.kind!r}")

    def _check(self, t: float) -> None:
        slack = self._range_slack * self.total_time
        if not -slack <= t <= self.total_time + slack:
            raise ValueError(f"t={t} outside [0, {self.total_time}]")

    def lam(self, t: float) -> float:
        self._check(t)
        return math.sin(math.pi * t / (2 * self.total_time)) ** 2

    def lam_dot(self, t: float) -> float:
        self._check(t)
        # clamp the O(1e-16) negative rounding at t = T
        return max(0.0, math.pi / (2 * self.total_time) * math.sin(math.pi * t / self.total_time))


def schedule_lambda(schedule: Schedule, t: float) -> float:
    return schedule.lam(t)


def schedule_lambda_dot(schedule: Schedule, t: float) -> float:
    return schedule.lam_dot(t)
