"""End-to-end acceptance checks, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
The two ensemble fixtures are shared between criteria 7, 8 and 9.
"""

import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

import dense_oracle as D
from lyapcd import lyapunov
from lyapcd.cd import BREAKDOWN_TOL, adiabatic_hamiltonian, alpha_local, krylov_agp, liouvillian, y_sum
from lyapcd.engine import CdSource, Mode, RunConfig, enhancement_factor, run_dalcco, run_dcqo, run_lc_dcqo
from lyapcd.experiment import ExperimentConfig, instance_seed, rows_to_csv, run_experiment
from lyapcd.lyapunov import cross_resonance_chain
from lyapcd.pauli import PauliOperator, hs_inner
from lyapcd.problem import SpinGlassInstance, generate_instance, ground_energy, hp_operator
from lyapcd.statevector import QuantumState, ShotConfig, basis_state, estimate_expectation, expectation

pytestmark = pytest.mark.slow

LOCAL = RunConfig(mode=Mode.DCQO_IMPULSE, cd_source=CdSource.LOCAL)
KRYLOV = RunConfig(mode=Mode.DCQO_IMPULSE, cd_source=CdSource.KRYLOV)


@pytest.fixture
def criterion(record_property):
    def mark(number, title):
        record_property("criterion", (number, title))
        return lambda detail: record_property("detail", detail)

    return mark


def ensemble(regime, sizes, count, feedback):
    """DCQO baseline plus feedback runs on ``count`` seeded instances per N."""
    out = {}
    for n in sizes:
        runs = []
        for i in range(count):
            inst = generate_instance(n, regime, 0.1, instance_seed(0, n, i))
            e0, _ = ground_energy(inst)
            if feedback == "dalcco":
                base = run_dcqo(inst, LOCAL, e0)
                fb = run_dalcco(inst, RunConfig(mode=Mode.DALCCO, cd_source=CdSource.LOCAL), e0)
            else:
                base = run_dcqo(inst, KRYLOV, e0)
                fb = run_lc_dcqo(inst, RunConfig(mode=Mode.LC_DCQO, cd_source=CdSource.KRYLOV), e0)
            runs.append((base, fb))
        out[n] = runs
    return out


@pytest.fixture(scope="module")
def weak_ensemble():
    start = time.perf_counter()
    runs = ensemble("weak", (6, 8, 10), 50, "dalcco")
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def comparable_ensemble():
    start = time.perf_counter()
    runs = ensemble("comparable", (6, 8), 50, "lc_dcqo")
    return runs, time.perf_counter() - start


def summarize(runs):
    ratio_base = np.mean([b.approximation_ratio for b, _ in runs])
    ratio_fb = np.mean([f.approximation_ratio for _, f in runs])
    enh = [enhancement_factor(f.final_energy, b.final_energy, b.e0) for b, f in runs]
    enh = [e for e in enh if e is not None]
    return ratio_base, ratio_fb, (float(np.mean(enh)) if enh else math.nan)


# 1 -----------------------------------------------------------------------------


def test_oracle_equivalence(criterion):
    detail = criterion(1, "oracle equivalence of every driver at N in {2,4,6,8}")
    start = time.perf_counter()
    drivers = [
        ("dcqo_local", lambda inst: run_dcqo(inst, LOCAL)),
        ("dcqo_krylov", lambda inst: run_dcqo(inst, KRYLOV)),
        ("dcqo_full", lambda inst: run_dcqo(inst, RunConfig(mode=Mode.DCQO_FULL))),
        ("dalcco", lambda inst: run_dalcco(inst, RunConfig(mode=Mode.DALCCO))),
        ("lc_dcqo", lambda inst: run_lc_dcqo(inst, RunConfig(mode=Mode.LC_DCQO, cd_source=CdSource.KRYLOV))),
    ]
    worst = 0.0
    count = 0
    for n in (2, 4, 6, 8):
        for i in range(5):
            inst = generate_instance(n, "weak" if i % 2 == 0 else "comparable", 0.1, 1000 * n + i)
            for name, driver in drivers:
                res = driver(inst)
                e_ref, _, f_ref = D.simulate(list(inst.fields), dict(inst.couplings), name)
                worst = max(worst, abs(res.final_energy - e_ref))
                if name in ("dalcco", "lc_dcqo"):
                    assert res.f_star == f_ref
            count += 1
    elapsed = time.perf_counter() - start
    detail(f"{count} instances, max |dE| = {worst:.1e}, {elapsed:.1f} s")
    assert count == 20
    assert worst <= 1e-8
    assert elapsed < 60


# 2 -----------------------------------------------------------------------------


def test_alpha_closed_form(criterion):
    detail = criterion(2, "closed-form local alpha vs numeric action minimization")
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 9))
        inst = SpinGlassInstance.from_arrays(
            rng.uniform(-1, 1, n), {(m, k): float(rng.uniform(-1, 1)) for m in range(n) for k in range(m + 1, n)}
        )
        lam = float(rng.uniform(0, 1))
        hp = D.terms_matrix(D.hp_terms(inst.fields, inst.couplings))
        hm = D.terms_matrix(D.hm_terms(n))
        ha = (1 - lam) * hm + lam * hp
        ys = D.terms_matrix(D.ysum_terms(n))
        m_op = -1j * (ha @ ys - ys @ ha)
        action = lambda a: D.hs(hp - hm + a * m_op, hp - hm + a * m_op).real
        deriv = lambda a: (action(a + 1e-3) - action(a - 1e-3)) / 2e-3
        worst = max(worst, abs(alpha_local(inst, lam) - brentq(deriv, -50, 50, xtol=1e-15, rtol=1e-15)))
    two_level = 0.0
    for h in (1.0, 0.3, -0.7):
        for lam in np.linspace(0, 1, 11):
            exact = h / (2 * ((1 - lam) ** 2 + lam**2 * h**2))
            two_level = max(two_level, abs(alpha_local(SpinGlassInstance.from_arrays([h]), lam) - exact))
    detail(f"max error {worst:.1e} (50 pairs), N=1 {two_level:.1e}")
    assert worst < 1e-8
    assert two_level < 1e-10


# 3 -----------------------------------------------------------------------------


def test_single_qubit_tracking(criterion):
    detail = criterion(3, "N=1 full-CD DCQO fidelity >= 0.999 at T=0.05 and T=0.5")
    inst = SpinGlassInstance.from_arrays([1.0])
    fids = []
    for steps in (5, 50):
        res = run_dcqo(inst, RunConfig(steps=steps, dt=0.01, mode=Mode.DCQO_FULL), e0=-1.0)
        fids.append(res.final_state.fidelity(basis_state(1, "1")))
    detail(", ".join(f"{f:.6f}" for f in fids))
    assert min(fids) >= 0.999


# 4 -----------------------------------------------------------------------------


def test_lanczos_layer(criterion):
    detail = criterion(4, "Lanczos orthonormality, recurrence, b1 = sqrt 2, O_1 form")
    rng = np.random.default_rng(3)
    worst_gram = worst_res = worst_form = 0.0
    for k in range(12):
        n = int(rng.integers(2, 7))
        inst = generate_instance(n, "comparable" if k % 2 else "weak", 0.1, int(rng.integers(2**32)))
        lam = float(rng.uniform(0, 1))
        agp = krylov_agp(inst, lam, 5)
        gram = np.array([[hs_inner(a, b).real for b in agp.basis] for a in agp.basis])
        worst_gram = max(worst_gram, float(np.abs(gram - np.eye(len(agp.basis))).max()))
        h = adiabatic_hamiltonian(inst, lam)
        for j in range(len(agp.basis) - 1):
            r = liouvillian(h, agp.basis[j]) - agp.lanczos_b[j] * agp.basis[j + 1]
            if j:
                r = r + agp.lanczos_b[j - 1] * agp.basis[j - 1]
            worst_res = max(worst_res, r.norm())
        assert all(b > BREAKDOWN_TOL for b in agp.lanczos_b)
        terms = {D.place(n, {l: "Y"}): h_l for l, h_l in enumerate(inst.fields)}
        for (m, j), v in inst.couplings.items():
            terms[D.place(n, {m: "Y", j: "Z"})] = v
            terms[D.place(n, {m: "Z", j: "Y"})] = v
        expected = PauliOperator.from_terms(n, terms)
        worst_form = max(worst_form, (agp.first_operator - expected / expected.norm()).norm())
    b1 = krylov_agp(SpinGlassInstance.from_arrays([1.0]), 0.4, 3).lanczos_b[0]
    detail(f"gram {worst_gram:.1e}, residual {worst_res:.1e}, b1 = {b1:.12f}, O_1 {worst_form:.1e}")
    assert worst_gram <= 1e-10
    assert worst_res <= 1e-8
    assert b1 == pytest.approx(math.sqrt(2), abs=1e-12)
    assert worst_form <= 1e-12


# 5 -----------------------------------------------------------------------------


def test_degeneracy_ladder(criterion):
    detail = criterion(5, "forced f=0 reduces feedback drivers to DCQO trace-for-trace")
    checked = 0
    for n in (3, 5, 7):
        for steps in (1, 5):
            inst = generate_instance(n, "weak", 0.1, 50 + n)
            fb = run_dalcco(inst, RunConfig(steps=steps, mode=Mode.DALCCO, fixed_f=0.0))
            assert fb.trace.energies == run_dcqo(inst, RunConfig(steps=steps)).trace.energies
            inst = generate_instance(n, "comparable", 1.0, 60 + n)
            fb = run_lc_dcqo(inst, RunConfig(steps=steps, mode=Mode.LC_DCQO, cd_source=CdSource.KRYLOV, fixed_f=0.0))
            base = run_dcqo(inst, RunConfig(steps=steps, cd_source=CdSource.KRYLOV))
            assert fb.trace.energies == base.trace.energies
            checked += 2
    detail(f"{checked} exact trace comparisons")


# 6 -----------------------------------------------------------------------------


def test_single_step_identity(criterion):
    detail = criterion(6, "s=1 DALCCO and DCQO ratios identical")
    for i in range(10):
        inst = generate_instance(6, "weak", 0.1, instance_seed(0, 6, i))
        e0, _ = ground_energy(inst)
        a = run_dalcco(inst, RunConfig(steps=1, mode=Mode.DALCCO), e0)
        b = run_dcqo(inst, RunConfig(steps=1), e0)
        assert a.approximation_ratio == b.approximation_ratio
    detail("10 instances")


# 7 -----------------------------------------------------------------------------


def test_monotonic_descent(criterion, weak_ensemble, comparable_ensemble):
    detail = criterion(7, "accepted runs monotone, rejected runs fall back to gamma = 0")
    accepted = rejected = 0
    for runs in (weak_ensemble[0], comparable_ensemble[0]):
        for n, pairs in runs.items():
            for base, fb in pairs:
                if fb.accepted:
                    accepted += 1
                    assert lyapunov.is_monotone(fb.trace.energies)
                else:
                    rejected += 1
                    assert fb.f_star == 0.0
                    assert all(g == 0.0 for g in fb.trace.gammas)
                    assert fb.trace.energies == base.trace.energies
    detail(f"{accepted} accepted, {rejected} fell back")


# 8 -----------------------------------------------------------------------------


def test_weak_coupling_ensemble(criterion, weak_ensemble):
    detail = criterion(8, "DALCCO beats DCQO on weak-coupling ensembles, mean E > 1.5")
    runs, elapsed = weak_ensemble
    parts, ok = [], True
    for n, pairs in runs.items():
        r_base, r_fb, enh = summarize(pairs)
        parts.append(f"N={n}: R {r_base:.3f}->{r_fb:.3f}, E {enh:.2f}")
        ok &= r_fb > r_base and enh > 1.5
    detail("; ".join(parts) + f"; {elapsed:.0f} s")
    assert ok
    assert elapsed < 600


# 9 -----------------------------------------------------------------------------


def test_comparable_ensemble(criterion, comparable_ensemble):
    detail = criterion(9, "LC-DCQO beats DCQO on comparable ensembles and the trivial instance")
    runs, elapsed = comparable_ensemble
    parts, ok = [], True
    for n, pairs in runs.items():
        r_base, r_fb, _ = summarize(pairs)
        parts.append(f"N={n}: R {r_base:.3f}->{r_fb:.3f}")
        ok &= r_fb > r_base
    trivial = SpinGlassInstance.from_arrays([1.0] * 6)
    base = run_dcqo(trivial, KRYLOV)
    lc = run_lc_dcqo(trivial, RunConfig(mode=Mode.LC_DCQO, cd_source=CdSource.KRYLOV))
    parts.append(f"trivial: R {base.approximation_ratio:.3f}->{lc.approximation_ratio:.3f}")
    detail("; ".join(parts) + f"; {elapsed:.0f} s")
    assert ok
    assert lc.approximation_ratio > base.approximation_ratio
    assert elapsed < 600


# 10 ----------------------------------------------------------------------------


def test_determinism_and_parallel_safety(criterion):
    detail = criterion(10, "byte-identical results.csv across repeats and worker counts")
    sizes = []
    for algorithm, regime in (("dalcco", "weak"), ("lc_dcqo", "comparable")):
        cfg = ExperimentConfig(n_list=(4, 6), instances_per_n=4, algorithm=algorithm, regime=regime, steps=(1, 5))
        first = rows_to_csv(run_experiment(cfg, workers=1))
        again = rows_to_csv(run_experiment(cfg, workers=1))
        parallel = rows_to_csv(run_experiment(cfg, workers=8))
        assert first.encode() == again.encode() == parallel.encode()
        sizes.append(len(first))
    detail(f"CSV sizes {sizes} bytes")


# 11 ----------------------------------------------------------------------------


def test_shot_mode(criterion):
    detail = criterion(11, "shot estimates converge; H_p measured in one group")
    n = 6
    inst = generate_instance(n, "comparable", 1.0, 5)
    hp = hp_operator(inst)
    obs = hp + lyapunov.build_observables(cross_resonance_chain(n), y_sum(n), hp).c_n
    rng = np.random.default_rng(11)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    psi = QuantumState(n, v / np.linalg.norm(v))
    exact = expectation(psi, obs)
    bound = 5e-3 * obs.l1_norm()
    gen = np.random.default_rng(2024)
    within = sum(abs(estimate_expectation(psi, obs, ShotConfig(10**6), gen)[0] - exact) < bound for _ in range(100))
    _, hp_groups, _ = estimate_expectation(psi, hp, ShotConfig(10))
    detail(f"{within}/100 within bound, H_p groups = {hp_groups}")
    assert within >= 99
    assert hp_groups == 1
