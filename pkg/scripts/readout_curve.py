"""Readout assignment fidelity against the number of repetitions.

Compares two atoms: the default bright one with 1 % pulse infidelity (errors
repeat between rounds) and a dim one with ideal pulses (independent rounds,
where the binomial majority-vote formula applies).

    python3 scripts/readout_curve.py --trials 20000
"""

import argparse

from rotqubit.readout import AtomicIonModel, ReadoutConfig, majority_vote_error, readout_fidelity_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--reps", type=int, nargs="+", default=[1, 3, 5, 7, 9])
    ap.add_argument("--infidelity", type=float, default=0.01)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    bright = AtomicIonModel()
    rows = readout_fidelity_sweep([ReadoutConfig(n, args.infidelity) for n in args.reps], args.trials,
                                  seed=1, atom=bright, threads=args.threads)
    print(f"bright atom, pulse infidelity {args.infidelity}")
    for r in rows:
        print(f"  reps {r.config.repetitions:2d}: fidelity {r.fidelity:.6f} [{r.ci_low:.6f}, {r.ci_high:.6f}]")

    dim = AtomicIonModel(bright_mean=6.0, dark_mean=0.5, threshold=3)
    p_bd, p_db = dim.misclassification()
    rows = readout_fidelity_sweep([ReadoutConfig(n) for n in args.reps], args.trials, seed=2, atom=dim,
                                  threads=args.threads)
    print(f"dim atom, ideal pulses (per-round errors {p_bd:.4f} / {p_db:.4f})")
    for r in rows:
        n = r.config.repetitions
        binom = 1 - 0.5 * (majority_vote_error(p_bd, n) + majority_vote_error(p_db, n))
        print(f"  reps {n:2d}: fidelity {r.fidelity:.6f} [{r.ci_low:.6f}, {r.ci_high:.6f}]  binomial {binom:.6f}")


if __name__ == "__main__":
    main()
