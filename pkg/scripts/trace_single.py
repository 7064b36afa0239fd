"""Per-step control trace of one instance: lambda, alpha, gamma and <H_p>.

    python scripts/trace_single.py --n 8 --seed 3 --algorithm dalcco
"""

import argparse

from lyapcd.engine import CdSource, Mode, RunConfig, run_dalcco, run_dcqo, run_lc_dcqo
from lyapcd.problem import generate_instance, ground_energy


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--n", type=int, default=6)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--algorithm", choices=["dalcco", "lc_dcqo"], default="dalcco")
    parser.add_argument("--regime", choices=["weak", "comparable"])
    parser.add_argument("--steps", type=int, default=5)
    parser.add_argument("--dt", type=float, default=0.01)
    parser.add_argument("--f", type=float, help="fix the gain instead of searching")
    args = parser.parse_args()

    regime = args.regime or ("weak" if args.algorithm == "dalcco" else "comparable")
    inst = generate_instance(args.n, regime, 0.1, args.seed)
    e0, bits = ground_energy(inst)
    if args.algorithm == "dalcco":
        cd, mode, driver = CdSource.LOCAL, Mode.DALCCO, run_dalcco
    else:
        cd, mode, driver = CdSource.KRYLOV, Mode.LC_DCQO, run_lc_dcqo
    base = run_dcqo(inst, RunConfig(steps=args.steps, dt=args.dt, cd_source=cd), e0)
    fb = driver(inst, RunConfig(steps=args.steps, dt=args.dt, mode=mode, cd_source=cd, fixed_f=args.f), e0)

    print(f"N={args.n} seed={args.seed} regime={regime} E0={e0:.6f} ground state {bits}")
    print(f"f* = {fb.f_star:g} (accepted: {fb.accepted})")
    print(f"{'j':>2} {'t':>6} {'lambda':>8} {'alpha':>9} {'gamma':>11} {'<Hp> dcqo':>11} {'<Hp> fb':>11}")
    for j, (b, s) in enumerate(zip(base.trace, fb.trace), start=1):
        print(f"{j:>2} {s.t:>6.3f} {s.lam:>8.4f} {s.alpha:>9.4f} {s.gamma:>11.4g} {b.energy:>11.6f} {s.energy:>11.6f}")
    print(f"R: dcqo {base.approximation_ratio:.4f}, {args.algorithm} {fb.approximation_ratio:.4f}")


if __name__ == "__main__":
    main()
