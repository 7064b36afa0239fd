"""Counterdiabatic coefficients: local action minimization and Krylov-truncated AGPs.

Conventions
-----------
The Liouvillian acts as ``M(O) = -i[H_a, O]``. Unlike the plain commutator
``[H_a, O]`` it maps Hermitian operators to Hermitian operators, so every
Krylov basis element stays Hermitian and every Lanczos coefficient is real.
The price is that ``M`` is anti-symmetric under the Hilbert-Schmidt product,
which gives the recurrence

    M(O_n) = -b_n O_{n-1} + b_{n+1} O_{n+1}.

A gauge potential ``A`` (Hermitian) is scored with the action
``S = ||d_lambda H_a + M(A)||^2``; the CD Hamiltonian term is ``lambda_dot * A``.
Writing ``A = i sum_k a_k L^{2k-1} dH`` with the plain Liouvillian is the same
operator family, reparameterized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import PauliOperator, commutator, hs_inner, pauli_string
from .problem import SpinGlassInstance, hm_operator, hp_operator

BREAKDOWN_TOL = 1e-10
DEFAULT_KRYLOV_D = 5


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda={lam} outside [0, 1]")


def adiabatic_hamiltonian(instance: SpinGlassInstance, lam: float) -> PauliOperator:
    """H_a = (1 - lambda) H_m + lambda H_p."""
    return (1.0 - lam) * hm_operator(instance) + lam * hp_operator(instance)


def d_lambda_hamiltonian(instance: SpinGlassInstance) -> PauliOperator:
    return hp_operator(instance) - hm_operator(instance)


def liouvillian(h: PauliOperator, op: PauliOperator) -> PauliOperator:
    """-i[h, op], Hermitian-preserving; imaginary round-off is discarded."""
    return (-1j * commutator(h, op)).real()


def y_sum(n_qubits: int) -> PauliOperator:
    """sum_i Y_i, the local CD operator."""
    return PauliOperator.from_terms(n_qubits, [(pauli_string(n_qubits, {i: "Y"}), 1.0) for i in range(n_qubits)])


# local CD --------------------------------------------------------------------


@dataclass(frozen=True)
class LocalCd:
    instance: SpinGlassInstance
    cd_operator: PauliOperator

    def alpha(self, lam: float) -> float:
        return alpha_local(self.instance, lam)


def local_cd(instance: SpinGlassInstance) -> LocalCd:
    return LocalCd(instance, y_sum(instance.n_qubits))


def local_action(instance: SpinGlassInstance, lam: float, alpha: float) -> float:
    """||d_lambda H_a + M(alpha sum_i Y_i)||^2 evaluated symbolically."""
    h_a = adiabatic_hamiltonian(instance, lam)
    g = d_lambda_hamiltonian(instance) + alpha * liouvillian(h_a, y_sum(instance.n_qubits))
    return g.norm() ** 2


def alpha_local(instance: SpinGlassInstance, lam: float) -> float:
    """Minimizer of the local action for A = alpha sum_i Y_i.

    The action is quadratic in alpha. With
    M(sum Y) = -2(1-l) sum Z - 2l sum h X - 2l sum J (XZ + ZX)
    the overlap with d_lambda H_a is -2 sum h, giving

        alpha = sum h / (2 [(1-l)^2 N + l^2 sum h^2 + 2 l^2 sum J^2]).
    """
    _check_lambda(lam)
    n = instance.n_qubits
    denom = 2.0 * ((1.0 - lam) ** 2 * n + lam**2 * instance.field_sq_sum() + 2.0 * lam**2 * instance.coupling_sq_sum())
    return instance.field_sum() / denom


# Krylov AGP --------------------------------------------------------------------


@dataclass
class KrylovAgp:
    dimension: int
    basis: list[PauliOperator]
    lanczos_b: list[float]
    norm0: float
    alphas: tuple[float, ...] = ()
    first_operator: PauliOperator | None = None
    terminated_early: bool = False
    degenerate: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def first_alpha(self) -> float:
        """alpha_1 per unit ||d_lambda H_a||, the coefficient the digital CD block uses."""
        return self.alphas[0] if self.alphas else 0.0

    @property
    def first_alpha_physical(self) -> float:
        """alpha_1 rescaled by ||d_lambda H_a||; for N = 1, this times O_1 equals alpha_local * Y."""
        return self.norm0 * self.first_alpha


def lanczos(h: PauliOperator, seed: PauliOperator, d: int, tol: float = BREAKDOWN_TOL) -> KrylovAgp:
    """Operator-space Lanczos for M = -i[h, .] started from ``seed``.

    Full reorthogonalization (two passes) against every earlier element.
    Stops at ``d`` basis elements or when the next b falls below ``tol``.
    """
    if d < 2:
        raise ValueError("Krylov dimension must be >= 2")
    norm0 = seed.norm()
    if norm0 < tol:
        return KrylovAgp(d, [], [], norm0, terminated_early=True, degenerate=True)
    basis = [seed / norm0]
    bs: list[float] = []
    early = False
    while len(basis) < d:
        w = liouvillian(h, basis[-1])
        if len(basis) >= 2:
            w = w + bs[-1] * basis[-2]
        for _ in range(2):
            for o in basis:
                w = w - hs_inner(o, w).real * o
        b = w.norm()
        if b < tol:
            early = True
            break
        bs.append(b)
        basis.append((w / b).real())
    return KrylovAgp(d, basis, bs, norm0, terminated_early=early)


def operator_lanczos(instance: SpinGlassInstance, lam: float, d: int = DEFAULT_KRYLOV_D) -> KrylovAgp:
    """Krylov basis of d_lambda H_a under M = -i[H_a(lambda), .]."""
    _check_lambda(lam)
    return lanczos(adiabatic_hamiltonian(instance, lam), d_lambda_hamiltonian(instance), d)


def krylov_action(alphas, lanczos_b, d: int) -> float:
    """Truncated action ||O_0 + sum_k alpha_k M(O_{2k-1})||^2 in Krylov coordinates."""
    r = _residual_matrix(lanczos_b, d)
    vec = r[:, 0] + r[:, 1:] @ np.asarray(alphas, dtype=float)
    return float(vec @ vec)


def _residual_matrix(lanczos_b, d: int) -> np.ndarray:
    # column 0: O_0; column k: M(O_{2k-1}) = -b_{2k-1} O_{2k-2} + b_{2k} O_{2k}
    b = list(lanczos_b) + [0.0] * d
    k_max = d // 2
    mat = np.zeros((d, k_max + 1))
    mat[0, 0] = 1.0
    for k in range(1, k_max + 1):
        mat[2 * k - 2, k] = -b[2 * k - 2]
        if 2 * k < d:
            mat[2 * k, k] = b[2 * k - 1]
    return mat


def agp_krylov_alphas(lanczos_b, d: int) -> tuple[tuple[float, ...], bool]:
    """Least-squares AGP coefficients in the d-dimensional Krylov basis.

    Returns ``(alphas, degenerate)`` with ``d // 2`` coefficients, one per odd
    basis element O_1, O_3, ... (per unit ||d_lambda H_a||). Missing b's from an
    early Lanczos stop count as zero. For d = 3 this reduces to
    alpha_1 = b_1 / (b_1^2 + b_2^2).
    """
    if d < 2:
        raise ValueError("Krylov dimension must be >= 2")
    if not any(abs(b) > 0 for b in lanczos_b):
        return (0.0,) * (d // 2), True
    r = _residual_matrix(lanczos_b, d)
    sol, *_ = np.linalg.lstsq(r[:, 1:], -r[:, 0], rcond=None)
    return tuple(float(a) for a in sol), False


def krylov_agp(instance: SpinGlassInstance, lam: float, d: int = DEFAULT_KRYLOV_D) -> KrylovAgp:
    agp = operator_lanczos(instance, lam, d)
    alphas, degenerate = agp_krylov_alphas(agp.lanczos_b, d)
    agp.alphas = alphas
    agp.degenerate = degenerate or agp.degenerate
    n = instance.n_qubits
    agp.first_operator = agp.basis[1] if len(agp.basis) > 1 else PauliOperator.zero(n)
    return agp


def lc_first_term(instance: SpinGlassInstance, lam: float, d: int = DEFAULT_KRYLOV_D) -> tuple[float, PauliOperator]:
    """First AGP element ``(alpha1, O_1)``; the CD generator is ``lambda_dot * alpha1 * O_1``.

    ``alpha1`` minimizes the action of the normalized seed O_0, so it is the
    physical coefficient divided by ||d_lambda H_a|| (see
    :attr:`KrylovAgp.first_alpha_physical`). O_1 is proportional to
    sum h Y + sum J (YZ + ZY).
    """
    agp = krylov_agp(instance, lam, d)
    if agp.degenerate:
        return 0.0, PauliOperator.zero(instance.n_qubits)
    return agp.first_alpha, agp.first_operator
