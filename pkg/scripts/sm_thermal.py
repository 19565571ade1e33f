"""Sorensen-Molmer gate fidelity against mean phonon number.

A full run with the default Fock cutoff takes a few minutes.

    python3 scripts/sm_thermal.py --n-bars 0 0.5 2 --n-max 36
"""

import argparse

from rotqubit import constants as const
from rotqubit.angular import NS2_PLUS
from rotqubit.gates import run_sorensen_molmer
from rotqubit.motion import MotionalMode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-bars", type=float, nargs="+", default=[0.0, 0.5, 2.0])
    ap.add_argument("--n-max", type=int, default=36, help="Fock cutoff")
    ap.add_argument("--delta-khz", type=float, default=10.0, help="detuning from the sidebands")
    ap.add_argument("--tol", type=float, default=1e-5)
    args = ap.parse_args()
    mode = MotionalMode(const.TWO_PI * 1e6, args.n_max, 0.1)
    rows, per_n = run_sorensen_molmer(NS2_PLUS, mode, const.TWO_PI * args.delta_khz * 1e3,
                                      n_bars=tuple(args.n_bars), tol=args.tol)
    print(f"{'n_bar':>6} {'fidelity':>12} {'tail mass':>10} {'top level':>12}")
    for r in rows:
        print(f"{r.n_bar:6.2f} {r.fidelity:12.8f} {r.tail_mass:10.2e} {r.truncation:12.2e}")
    f = [r.fidelity for r in rows]
    print(f"spread across n_bar: {max(f) - min(f):.2e}")
    print("Fock-state fidelities n = 0..5:", " ".join(f"{x:.6f}" for x in per_n[:6]))


if __name__ == "__main__":
    main()
