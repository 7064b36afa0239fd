"""Algorithm drivers: DCQO (impulse and full CD), DALCCO and LC-DCQO."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .cd import DEFAULT_KRYLOV_D, adiabatic_hamiltonian, alpha_local, lc_first_term, y_sum
from .lyapunov import (
    FSearchConfig,
    build_observables,
    control_gamma,
    cross_resonance_chain,
    f_search,
)
from .pauli import PauliOperator
from .problem import Schedule, SpinGlassInstance, ground_energy, hp_operator
from .statevector import (
    QuantumState,
    ShotConfig,
    apply_rotations,
    estimate_expectation,
    evolve,
    expectation,
    plus_state,
)


class Mode(str, Enum):
    DCQO_IMPULSE = "dcqo_impulse"
    DCQO_FULL = "dcqo_full"
    DALCCO = "dalcco"
    LC_DCQO = "lc_dcqo"


class CdSource(str, Enum):
    LOCAL = "local_action"
    KRYLOV = "krylov_d"


class RatioUndefinedError(ValueError):
    def __init__(self, energy: float, e0: float):
        super().__init__(f"approximation ratio undefined for E0={e0} (final energy {energy})")
        self.energy = energy
        self.e0 = e0


@dataclass(frozen=True)
class RunConfig:
    steps: int = 5
    dt: float = 0.01
    mode: Mode = Mode.DCQO_IMPULSE
    cd_source: CdSource = CdSource.LOCAL
    krylov_d: int = DEFAULT_KRYLOV_D
    shot_mode: ShotConfig | None = None
    fsearch: FSearchConfig = field(default_factory=FSearchConfig)
    fixed_f: float | None = None  # bypasses f_search when set
    analog_tol: float = 1e-8
    substeps: int = 1  # repeats of each digital product at dt / substeps

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "cd_source", CdSource(self.cd_source))
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.krylov_d < 2:
            raise ValueError("krylov_d must be >= 2")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def total_time(self) -> float:
        return self.steps * self.dt

    def schedule(self) -> Schedule:
        return Schedule(self.total_time)


@dataclass
class StepRecord:
    t: float
    lam: float
    lam_dot: float
    alpha: float
    gamma: float
    f: float
    energy: float
    ev_n: float = math.nan
    ev_cd: float = math.nan
    groups: int = 0
    shots: int = 0


@dataclass
class ControlTrace:
    steps: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i) -> StepRecord:
        return self.steps[i]

    @property
    def energies(self) -> list[float]:
        return [s.energy for s in self.steps]

    @property
    def gammas(self) -> list[float]:
        return [s.gamma for s in self.steps]

    @property
    def groups_measured(self) -> int:
        return sum(s.groups for s in self.steps)

    @property
    def shots_used(self) -> int:
        return sum(s.shots for s in self.steps)


@dataclass
class RunResult:
    algorithm: str
    final_energy: float
    approximation_ratio: float
    e0: float
    trace: ControlTrace
    f_star: float = 0.0
    accepted: bool = False
    final_state: QuantumState | None = field(default=None, repr=False)


# metrics --------------------------------------------------------------------


def approximation_ratio(energy: float, e0: float) -> float:
    if not e0 < 0:
        raise RatioUndefinedError(energy, e0)
    return energy / e0


def enhancement_factor(e_dalcco: float, e_dcqo: float, e0: float | None = None) -> float | None:
    """E_feedback / E_dcqo, or None when the DCQO energy is numerically zero."""
    scale = abs(e0) if e0 is not None else 1.0
    if abs(e_dcqo) < 1e-9 * scale:
        return None
    return e_dalcco / e_dcqo


# shared machinery -------------------------------------------------------------


@dataclass(frozen=True)
class _Step:
    t: float
    lam: float
    lam_dot: float
    alpha: float
    o_cd: PauliOperator

    @property
    def generator(self) -> PauliOperator:
        return (self.lam_dot * self.alpha) * self.o_cd


def plan_steps(instance: SpinGlassInstance, config: RunConfig) -> list[_Step]:
    """Schedule values and CD generators at t_j = j dt, j = 1..s."""
    sched = config.schedule()
    local = y_sum(instance.n_qubits) if config.cd_source is CdSource.LOCAL else None
    out = []
    for j in range(1, config.steps + 1):
        t = j * config.dt
        lam, lam_dot = sched.lam(t), sched.lam_dot(t)
        if local is not None:
            alpha, o_cd = alpha_local(instance, lam), local
        else:
            alpha, o_cd = lc_first_term(instance, lam, config.krylov_d)
        out.append(_Step(t, lam, lam_dot, alpha, o_cd))
    return out


class _Meter:
    """Exact or shot-sampled expectation values with overhead accounting."""

    def __init__(self, shot_mode: ShotConfig | None):
        self.shot_mode = shot_mode
        self.rng = np.random.default_rng(shot_mode.rng_seed) if shot_mode else None

    def __call__(self, state: QuantumState, obs: PauliOperator) -> tuple[float, int, int]:
        if self.shot_mode is None:
            return expectation(state, obs), 0, 0
        return estimate_expectation(state, obs, self.shot_mode, self.rng)


def _digital(state: QuantumState, generator: PauliOperator, config: RunConfig) -> QuantumState:
    h = config.dt / config.substeps
    for _ in range(config.substeps):
        state = apply_rotations(state, generator, h)
    return state


def _full_cd_step(state: QuantumState, h_a: PauliOperator, cd: PauliOperator, config: RunConfig) -> QuantumState:
    h = config.dt / config.substeps
    for _ in range(config.substeps):
        state = apply_rotations(state, h_a, h)
        state = apply_rotations(state, cd, h)
    return state


def _finish(name, instance, state, trace, e0, h_p, f_star=0.0, accepted=False) -> RunResult:
    energy = expectation(state, h_p)
    if e0 is None:
        e0 = ground_energy(instance)[0]
    ratio = approximation_ratio(energy, e0)
    return RunResult(name, energy, ratio, e0, trace, f_star, accepted, state)


# drivers ----------------------------------------------------------------------


def run_dcqo(instance: SpinGlassInstance, config: RunConfig, e0: float | None = None) -> RunResult:
    """Digitized CD evolution from |+>^N; impulse mode drops H_a."""
    mode = config.mode
    if mode not in (Mode.DCQO_IMPULSE, Mode.DCQO_FULL):
        mode = Mode.DCQO_IMPULSE
    h_p = hp_operator(instance)
    meter = _Meter(config.shot_mode)
    state = plus_state(instance.n_qubits)
    trace = ControlTrace()
    for step in plan_steps(instance, config):
        if mode is Mode.DCQO_IMPULSE:
            state = _digital(state, step.generator, config)
        else:
            state = _full_cd_step(state, adiabatic_hamiltonian(instance, step.lam), step.generator, config)
        energy, groups, shots = meter(state, h_p)
        trace.steps.append(StepRecord(step.t, step.lam, step.lam_dot, step.alpha, 0.0, 0.0, energy,
                                      groups=groups, shots=shots))
    return _finish(mode.value, instance, state, trace, e0, h_p)


def _feedback_trial(instance, config, plan, h_p, control, control_block, f) -> tuple[QuantumState, ControlTrace]:
    meter = _Meter(config.shot_mode)
    state = plus_state(instance.n_qubits)
    trace = ControlTrace()
    observables = {}
    gamma = 0.0
    for j, step in enumerate(plan):
        state = _digital(state, step.generator, config)
        if j > 0 and gamma != 0.0:
            state = control_block(state, gamma)
        energy, groups, shots = meter(state, h_p)
        record = StepRecord(step.t, step.lam, step.lam_dot, step.alpha, gamma, f, energy, groups=groups, shots=shots)
        if j + 1 < len(plan) and f != 0.0:
            nxt = plan[j + 1]
            key = id(nxt.o_cd)
            if key not in observables:
                observables[key] = build_observables(control, nxt.o_cd, h_p)
            obs = observables[key]
            ev_n, g1, s1 = meter(state, obs.c_n)
            raw_cd, g2, s2 = meter(state, obs.c_cd)
            ev_cd = nxt.lam_dot * nxt.alpha * raw_cd
            record.ev_n, record.ev_cd = ev_n, ev_cd
            record.groups += g1 + g2
            record.shots += s1 + s2
            gamma = control_gamma(f, ev_n, ev_cd)
        else:
            gamma = 0.0
        trace.steps.append(record)
    return state, trace


def _run_feedback(name, instance, config, control, control_block, e0) -> RunResult:
    h_p = hp_operator(instance)
    build_observables(control, y_sum(instance.n_qubits), h_p)  # fail fast on a useless control
    plan = plan_steps(instance, config)
    cache: dict[float, tuple[QuantumState, ControlTrace]] = {}

    def runner(f: float) -> list[float]:
        if f not in cache:
            cache[f] = _feedback_trial(instance, config, plan, h_p, control, control_block, f)
        return cache[f][1].energies

    if config.fixed_f is not None:
        f_star, accepted = float(config.fixed_f), True
    else:
        f_star, accepted = f_search(runner, config.fsearch)
    runner(f_star)
    state, trace = cache[f_star]
    return _finish(name, instance, state, trace, e0, h_p, f_star, accepted)


def run_dalcco(
    instance: SpinGlassInstance,
    config: RunConfig,
    e0: float | None = None,
    native: PauliOperator | None = None,
) -> RunResult:
    """Digital local-CD blocks interleaved with analog native-Hamiltonian blocks.

    The analog block at step j evolves under gamma(t_j) H_n for dt, where H_n
    defaults to the open cross-resonance chain and gamma(t_j) comes from
    measurements taken after step j-1 (gamma(t_1) = 0).
    """
    if config.cd_source is not CdSource.LOCAL:
        raise ValueError("DALCCO keeps the digital CD part 1-local; use cd_source=local_action")
    control = native if native is not None else cross_resonance_chain(instance.n_qubits)

    def analog(state, gamma):
        return evolve(state, control, gamma * config.dt, tol=config.analog_tol)

    return _run_feedback(Mode.DALCCO.value, instance, config, control, analog, e0)


def run_lc_dcqo(
    instance: SpinGlassInstance,
    config: RunConfig,
    e0: float | None = None,
    native: PauliOperator | None = None,
) -> RunResult:
    """Fully digital variant: Krylov first-order CD term plus gamma sum_i Y_i rotations."""
    if config.cd_source is not CdSource.KRYLOV:
        config = replace(config, cd_source=CdSource.KRYLOV)
    control = native if native is not None else y_sum(instance.n_qubits)

    def digital_control(state, gamma):
        return apply_rotations(state, gamma * control, config.dt)

    return _run_feedback(Mode.LC_DCQO.value, instance, config, control, digital_control, e0)


def run(instance: SpinGlassInstance, config: RunConfig, e0: float | None = None) -> RunResult:
    """Dispatch on ``config.mode``."""
    if config.mode is Mode.DALCCO:
        return run_dalcco(instance, config, e0)
    if config.mode is Mode.LC_DCQO:
        return run_lc_dcqo(instance, config, e0)
    return run_dcqo(instance, config, e0)
