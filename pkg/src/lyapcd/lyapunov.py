"""Lyapunov feedback: commutator observables, the gain law and the f search."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

from .pauli import PauliOperator, commutator_i, pauli_string

log = logging.getLogger(__name__)

# relative float noise tolerated on top of the configured slack
ROUNDING_RTOL = 1e-12


class ConfigurationError(ValueError):
    """The control Hamiltonian cannot steer <H_p>."""


@dataclass(frozen=True)
class FeedbackObservables:
    c_n: PauliOperator  # i[H_n, H_p]
    c_cd: PauliOperator  # i[O_cd, H_p]


@dataclass(frozen=True)
class FSearchConfig:
    f_initial: float = 10.0
    reduction_factor: float = 10.0
    max_reductions: int = 6
    monotonicity_slack: float = 0.0

    def __post_init__(self):
        if not self.f_initial > 0:
            raise ValueError("f_initial must be positive")
        if not self.reduction_factor > 1:
            raise ValueError("reduction_factor must exceed 1")
        if self.max_reductions < 0:
            raise ValueError("max_reductions must be >= 0")
        if self.monotonicity_slack < 0:
            raise ValueError("monotonicity_slack must be >= 0")

    def candidates(self) -> list[float]:
        return [self.f_initial / self.reduction_factor**k for k in range(self.max_reductions + 1)]


def cross_resonance_chain(n_qubits: int) -> PauliOperator:
    """sum_j Y_j + sum_{j<N-1} Z_j X_{j+1} on an open chain."""
    terms = [(pauli_string(n_qubits, {j: "Y"}), 1.0) for j in range(n_qubits)]
    terms += [(pauli_string(n_qubits, {j: "Z", j + 1: "X"}), 1.0) for j in range(n_qubits - 1)]
    return PauliOperator.from_terms(n_qubits, terms)


def _hermitian_commutator(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    c = commutator_i(a, b)
    if not c.is_hermitian(atol=1e-12 * max(1.0, c.l1_norm())):
        raise ValueError("i[a, b] is not Hermitian; operands must be Hermitian")
    return c.real()


def build_observables(h_n: PauliOperator, o_cd: PauliOperator, h_p: PauliOperator) -> FeedbackObservables:
    c_n = _hermitian_commutator(h_n, h_p)
    if c_n.is_zero():
        raise ConfigurationError("control Hamiltonian commutes with H_p, so <i[H_n, H_p]> vanishes identically")
    return FeedbackObservables(c_n, _hermitian_commutator(o_cd, h_p))


def control_gamma(f: float, ev_n: float, ev_cd: float) -> float:
    """gamma = f <i[H_n, H_p]> <i[A, H_p]>, with A's scalar prefactor already in ``ev_cd``.

    With H = A + gamma H_n the Ehrenfest rate is
    d<H_p>/dt = ev_cd + gamma ev_n = ev_cd (1 + f ev_n^2),
    so the control term pushes in the same direction as the CD term and never
    reverses its sign for f >= 0.
    """
    return f * ev_n * ev_cd


def energy_rate(ev_cd: float, gamma: float, ev_n: float) -> float:
    """Instantaneous d<H_p>/dt under A + gamma H_n."""
    return ev_cd + gamma * ev_n


def is_monotone(energies: Sequence[float], slack: float = 0.0) -> bool:
    """True if every step satisfies E_{j+1} <= E_j + slack (plus float-noise allowance)."""
    for prev, cur in zip(energies, energies[1:]):
        if cur > prev + slack + ROUNDING_RTOL * max(1.0, abs(prev)):
            return False
    return True


def f_search(runner: Callable[[float], Sequence[float]], cfg: FSearchConfig = FSearchConfig()) -> tuple[float, bool]:
    """Reduce f geometrically from ``f_initial`` until the energy trace is monotone.

    ``runner(f)`` must return the per-step <H_p> trace. Returns ``(f, True)``
    for the first qualifying candidate, or ``(0.0, False)`` when none does,
    meaning the run falls back to gamma = 0.
    """
    for f in cfg.candidates():
        if is_monotone(runner(f), cfg.monotonicity_slack):
            return f, True
        log.debug("f=%g rejected: energy trace not monotone", f)
    return 0.0, False
