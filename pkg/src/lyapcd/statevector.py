"""Dense statevector simulation driven by :class:`~lyapcd.pauli.PauliOperator`.

Basis index bit ``N-1-q`` holds qubit ``q`` (qubit 0 is the most significant
bit) and ``|0>`` is the +1 eigenstate of Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .pauli import PauliOperator, PauliTerm, encode

NORM_ATOL = 1e-10
_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j])
_SQ = 1 / math.sqrt(2)
_HADAMARD = np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=np.complex128)
_SDG = np.array([[1, 0], [0, -1j]], dtype=np.complex128)


class ContractError(ValueError):
    """An operand violates an operation's precondition."""


class ConvergenceError(RuntimeError):
    """A propagator could not meet its tolerance within the resource budget."""


@dataclass
class QuantumState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ContractError(f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    def copy(self) -> QuantumState:
        return QuantumState(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def fidelity(self, other: QuantumState) -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass(frozen=True)
class ShotConfig:
    shots_per_group: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.shots_per_group < 1:
            raise ValueError("shots_per_group must be >= 1")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be unsigned")


@lru_cache(maxsize=32)
def _indices(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits, dtype=np.uint64)
    idx.setflags(write=False)
    return idx


def _signs(idx: np.ndarray, z) -> np.ndarray:
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(z)) & 1)


def plus_state(n_qubits: int) -> QuantumState:
    """|+>^N, the ground state of -sum_i X_i."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    dim = 1 << n_qubits
    return QuantumState(n_qubits, np.full(dim, 1 / math.sqrt(dim), dtype=np.complex128))


def basis_state(n_qubits: int, bits: str | int) -> QuantumState:
    """Computational basis state; ``bits`` is a bitstring with qubit 0 first, or an index."""
    index = int(bits, 2) if isinstance(bits, str) else int(bits)
    if isinstance(bits, str) and len(bits) != n_qubits:
        raise ValueError(f"bitstring {bits!r} is not {n_qubits} long")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return QuantumState(n_qubits, amps)


def _apply_string(amps: np.ndarray, idx: np.ndarray, x: int, z: int, coeff: complex) -> np.ndarray:
    # P|b> = i^{|x&z|} (-1)^{|b&z|} |b^x>, so (P psi)[b] = phase(b^x) psi[b^x]
    src = idx ^ np.uint64(x)
    phase = coeff * _PHASES[(x & z).bit_count() % 4]
    return phase * _signs(src, z) * amps[src.astype(np.intp)]


def apply_operator(state: QuantumState, op: PauliOperator) -> np.ndarray:
    """Return the (unnormalized) amplitude vector op|psi>."""
    if op.n_qubits != state.n_qubits:
        raise ContractError(f"operator on {op.n_qubits} qubits, state on {state.n_qubits}")
    return _apply(state.amplitudes, op)


def _apply(amps: np.ndarray, op: PauliOperator) -> np.ndarray:
    if op.is_diagonal():
        return _diagonal(op) * amps
    return _sparse(op) @ amps


def _sparse(op: PauliOperator) -> sparse.csr_matrix:
    """CSR image of ``op``, built once per operator and cached on it."""
    mat = op._cache.get("csr")
    if mat is None:
        idx = _indices(op.n_qubits)
        rows, cols, data = [], [], []
        for x, z, c in zip(op.xs.tolist(), op.zs.tolist(), op.coeffs.tolist()):
            src = idx ^ np.uint64(x)
            rows.append(idx)
            cols.append(src)
            data.append(c * _PHASES[(x & z).bit_count() % 4] * _signs(src, z))
        dim = 1 << op.n_qubits
        mat = sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows).astype(np.intp), np.concatenate(cols).astype(np.intp))),
            shape=(dim, dim),
        )
        op._cache["csr"] = mat
    return mat


def _diagonal(op: PauliOperator) -> np.ndarray:
    diag = op._cache.get("diag")
    if diag is None:
        idx = _indices(op.n_qubits)
        diag = np.zeros(1 << op.n_qubits, dtype=np.complex128)
        for z, c in zip(op.zs.tolist(), op.coeffs.tolist()):
            diag += c * _signs(idx, z)
        diag.setflags(write=False)
        op._cache["diag"] = diag
    return diag


def _require_hermitian(op: PauliOperator, what: str) -> None:
    if not op.is_hermitian(atol=1e-12 * max(1.0, op.l1_norm())):
        raise ContractError(f"{what} must be Hermitian")


def apply_pauli_rotation(state: QuantumState, p: PauliTerm | str, theta: float) -> QuantumState:
    """exp(-i theta P)|psi> = cos(theta)|psi> - i sin(theta) P|psi> for a unit Pauli string P."""
    if isinstance(p, str):
        p = PauliTerm(p)
    if abs(complex(p.coefficient) - 1.0) > 1e-12:
        raise ContractError(f"rotation generator must have unit coefficient, got {p.coefficient}")
    if p.n_qubits != state.n_qubits:
        raise ContractError(f"string on {p.n_qubits} qubits, state on {state.n_qubits}")
    theta = float(theta)
    if theta == 0.0:
        return state.copy()
    x, z = encode(p.letters)
    p_psi = _apply_string(state.amplitudes, _indices(state.n_qubits), x, z, 1.0)
    return QuantumState(state.n_qubits, math.cos(theta) * state.amplitudes - 1j * math.sin(theta) * p_psi)


def apply_rotations(state: QuantumState, generator: PauliOperator, dt: float) -> QuantumState:
    """First-order product of exact rotations exp(-i c_k P_k dt) in splitting order.

    Exact when the strings of ``generator`` mutually commute.
    """
    _require_hermitian(generator, "rotation generator")
    out = state
    for term in generator.terms():
        out = apply_pauli_rotation(out, PauliTerm(term.letters), term.coefficient.real * dt)
    return out if out is not state else state.copy()


def _taylor_order(x: float, budget: float) -> int:
    # smallest K with remainder bound x^{K+1}/(K+1)! * e^x <= budget
    k, term = 0, 1.0
    while True:
        term *= x / (k + 1)
        if term * math.exp(x) <= budget:
            return k
        k += 1
        if k > 60:
            return k


def evolve(
    state: QuantumState,
    h: PauliOperator,
    duration: float,
    tol: float = 1e-8,
    max_substeps: int = 100_000,
    step_norm: float = 2.0,
) -> QuantumState:
    """exp(-i h duration)|psi> via sub-stepped truncated Taylor series.

    Each sub-step has ``||h|| dt <= step_norm`` (ell_1 bound on the operator
    norm) and a series order chosen so the accumulated truncation error stays
    below ``tol / 2``; renormalization costs at most another factor 2.
    """
    _require_hermitian(h, "Hamiltonian")
    if h.n_qubits != state.n_qubits:
        raise ContractError(f"Hamiltonian on {h.n_qubits} qubits, state on {state.n_qubits}")
    duration = float(duration)
    if not math.isfinite(duration):
        raise ContractError("duration must be finite")
    total = h.l1_norm() * abs(duration)
    if total == 0.0:
        return state.copy()
    if h.is_diagonal():
        phases = np.exp(-1j * duration * _diagonal(h).real)
        return QuantumState(state.n_qubits, phases * state.amplitudes)
    m = max(1, math.ceil(total / step_norm))
    if m > max_substeps:
        raise ConvergenceError(f"evolution needs {m} sub-steps > budget {max_substeps}")
    x = total / m
    order = _taylor_order(x, 0.5 * tol / m)
    if order > 60:
        raise ConvergenceError(f"Taylor order {order} exceeded at tol={tol}")
    hr = h.real()
    dt = duration / m
    psi = state.amplitudes.copy()
    for _ in range(m):
        term = psi
        acc = psi.copy()
        for k in range(1, order + 1):
            term = (-1j * dt / k) * _apply(term, hr)
            acc += term
        psi = acc
    psi /= np.linalg.norm(psi)
    return QuantumState(state.n_qubits, psi)


def expectation(state: QuantumState, obs: PauliOperator) -> float:
    """<psi|obs|psi>, exact."""
    _require_hermitian(obs, "observable")
    if obs.n_qubits != state.n_qubits:
        raise ContractError(f"observable on {obs.n_qubits} qubits, state on {state.n_qubits}")
    if obs.is_diagonal():
        val = complex(np.dot(state.probabilities(), _diagonal(obs).real))
    else:
        val = complex(np.vdot(state.amplitudes, _apply(state.amplitudes, obs)))
    if abs(val.imag) > 1e-10 * max(1.0, obs.l1_norm()):
        raise ContractError(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


# shot-based estimation -------------------------------------------------------


def qubitwise_commute(a: str, b: str) -> bool:
    return all(p == q or p == "I" or q == "I" for p, q in zip(a, b))


def group_qubitwise(terms: list[PauliTerm]) -> list[list[PauliTerm]]:
    """Greedy first-fit partition into qubit-wise commuting groups, in term order."""
    groups: list[list[PauliTerm]] = []
    for term in terms:
        for group in groups:
            if all(qubitwise_commute(term.letters, g.letters) for g in group):
                group.append(term)
                break
        else:
            groups.append([term])
    return groups


def _apply_single(amps: np.ndarray, n_qubits: int, q: int, gate: np.ndarray) -> np.ndarray:
    view = amps.reshape(1 << q, 2, 1 << (n_qubits - q - 1))
    return np.einsum("ab,ibj->iaj", gate, view).reshape(-1)


def _measurement_basis(group: list[PauliTerm]) -> str:
    n = group[0].n_qubits
    letters = ["I"] * n
    for term in group:
        for q, ch in enumerate(term.letters):
            if ch != "I":
                letters[q] = ch
    return "".join(letters)


def _rotate_to_z(state: QuantumState, basis: str) -> np.ndarray:
    amps = state.amplitudes
    for q, ch in enumerate(basis):
        if ch == "X":
            amps = _apply_single(amps, state.n_qubits, q, _HADAMARD)
        elif ch == "Y":
            amps = _apply_single(amps, state.n_qubits, q, _HADAMARD @ _SDG)
    return amps


def estimate_expectation(
    state: QuantumState,
    obs: PauliOperator,
    cfg: ShotConfig,
    rng: np.random.Generator | None = None,
) -> tuple[float, int, int]:
    """Shot-sampled estimate of <obs>.

    Returns ``(estimate, groups, total_shots)``. The identity component is
    added exactly and costs no shots. Pass ``rng`` to draw from a caller-owned
    stream; otherwise a fresh generator is seeded from ``cfg.rng_seed``.
    """
    _require_hermitian(obs, "observable")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    terms = obs.real().terms()
    estimate = 0.0
    measured = []
    for term in terms:
        if term.weight == 0:
            estimate += term.coefficient.real
        else:
            measured.append(term)
    groups = group_qubitwise(measured)
    idx = _indices(state.n_qubits)
    for group in groups:
        amps = _rotate_to_z(state, _measurement_basis(group))
        probs = np.abs(amps) ** 2
        counts = rng.multinomial(cfg.shots_per_group, probs / probs.sum())
        hit = np.nonzero(counts)[0]
        for term in group:
            x, z = encode(term.letters)
            signs = _signs(idx[hit], x | z)
            estimate += term.coefficient.real * float(np.dot(counts[hit], signs)) / cfg.shots_per_group
    return estimate, len(groups), len(groups) * cfg.shots_per_group
