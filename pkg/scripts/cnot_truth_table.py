"""Cirac-Zoller CNOT truth table from phonon n = 0.

    python3 scripts/cnot_truth_table.py --sideband-khz 20 --carrier-khz 100
"""

import argparse

import numpy as np

from rotqubit import constants as const
from rotqubit.angular import NS2_PLUS
from rotqubit.gates import run_cnot
from rotqubit.motion import MotionalMode

LABELS = ["|dd>", "|du>", "|ud>", "|uu>"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nu-mhz", type=float, default=1.0)
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--sideband-khz", type=float, default=20.0)
    ap.add_argument("--carrier-khz", type=float, default=100.0)
    ap.add_argument("--light-shift", action="store_true", help="keep the static AC-Stark terms")
    args = ap.parse_args()
    mode = MotionalMode(const.TWO_PI * args.nu_mhz * 1e6, 3, args.eta)
    report, _ = run_cnot(NS2_PLUS, mode, const.TWO_PI * args.sideband_khz * 1e3,
                         const.TWO_PI * args.carrier_khz * 1e3, light_shift=args.light_shift)
    print("populations |<out|U|in>|^2 (columns: input)")
    print("      " + "  ".join(f"{s:>6}" for s in LABELS))
    for i, s in enumerate(LABELS):
        print(f"{s:>6}" + "  ".join(f"{v:6.4f}" for v in np.abs(report.realized[i]) ** 2))
    print(f"row fidelities: {np.round(report.row_fidelity, 9)}")
    print(f"superposition fidelity: {report.superposition_fidelity:.9f}")
    print(f"gate fidelity: {report.fidelity:.9f}, after local phase correction {report.corrected_fidelity:.9f}")


if __name__ == "__main__":
    main()
