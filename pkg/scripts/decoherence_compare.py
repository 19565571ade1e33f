"""Electronic-spin vs rotational qubit T2 in both noise regimes.

    python3 scripts/decoherence_compare.py --sigma 1e-9 --trials 2000
"""

import argparse

from rotqubit.decoherence import NoiseProcess, compare_coherence, electronic_qubit, rotational_qubit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=1e-9, help="RMS field noise (tesla)")
    ap.add_argument("--g-r", type=float, default=-0.014)
    ap.add_argument("--trials", type=int, default=2000)
    args = ap.parse_args()
    a, b = electronic_qubit(), rotational_qubit(args.g_r)
    for label, tau in (("quasi-static", 1e12), ("motional narrowing", 1e-4)):
        c = compare_coherence(a, b, NoiseProcess(args.sigma, tau), trials=args.trials, seed=3)
        print(f"{label} (tau_c = {tau:g} s, fitted as {c.regime}):")
        print(f"  T2 electronic {c.a.T2:.4g} s, rotational {c.b.T2:.4g} s")
        print(f"  ratio {c.ratio:.4g} [{c.ratio_ci[0]:.4g}, {c.ratio_ci[1]:.4g}]")
        print(f"  sensitivity ratio {c.sensitivity_ratio:.4g}, squared {c.sensitivity_ratio**2:.4g}")


if __name__ == "__main__":
    main()
