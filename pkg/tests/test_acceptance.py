"""Acceptance criteria 1-10, each at its stated tolerance.

Every criterion records one PASS/FAIL line that is printed in the terminal
summary.  Presets are run through the same entry point as the command line.
"""

import math

import numpy as np
import pytest
from scipy import stats

from conftest import record_criterion
from oracles import binomial_majority_error, cnot_oracle, quad_cos2, readout_markov_oracle
from rotqubit import cli, config
from rotqubit.angular import DOWN, UP, MoleculeParams, cos2_matrix_element, rot_energy
from rotqubit.readout import AtomicIonModel, ReadoutConfig, readout_fidelity_sweep


def run_preset(name, threads=1):
    return cli.execute(config.load(config.preset_path(name)), threads).results


def test_criterion_1_matrix_element():
    v = cos2_matrix_element(DOWN, UP)
    q = quad_cos2((0, 0), (2, 0))
    ok = abs(v - 0.29814) < 1e-4 and abs(v - q) < 1e-10
    record_criterion(1, ok, f"<0,0|cos^2|2,0> = {v:.6f}, |value - quadrature| = {abs(v - q):.1e}")
    assert ok


def test_criterion_2_spectrum():
    gap = rot_energy(2, 3.44e9) - rot_energy(0, 3.44e9)
    from_omega = MoleculeParams("B0 = 3.44 GHz", 3.44e9, 1.0).omega0 / (2 * math.pi)
    # exact up to binary floating point (sub-millihertz)
    ok = abs(gap - 20.64e9) < 1e-3 and abs(from_omega - 20.64e9) < 1e-3
    record_criterion(2, ok, f"qubit gap = {gap:.1f} Hz, omega0 / 2pi = {from_omega:.1f} Hz")
    assert ok


def test_criterion_3_intensity_chain():
    r = run_preset("ns2-rabi")
    rabi = r["closed_form_rabi_hz"]
    ok = r["intensity_w_cm2"] == pytest.approx(2.5e6) and abs(rabi / 1e6 - 1) < 0.10
    record_criterion(3, ok, f"2.5e6 W/cm^2 -> Omega/2pi = {rabi / 1e6:.4f} MHz "
                            f"(fitted {r['fitted_rabi_hz'] / 1e6:.4f} MHz)")
    assert ok


def test_criterion_4_dynamics_vs_closed_form():
    r = run_preset("ns2-rabi-dynamics")
    run = r["runs"][0]
    ok = (r["rabi_over_omega0"] == pytest.approx(1e-3) and abs(r["fit_ratio"] - 1) < 0.02
          and run["leakage_other_M"] < 1e-10 and run["norm_drift"] < 1e-10)
    record_criterion(4, ok, f"fit/closed form = {r['fit_ratio']:.6f}, M != 0 leakage = "
                            f"{run['leakage_other_M']:.1e}, norm drift = {run['norm_drift']:.1e}")
    assert ok


def test_criterion_5_selection_rule_exclusivity():
    r = run_preset("ns2-aux")
    from_ground, spectator = r["runs"]
    assert from_ground["initial"] == [0, 0] and spectator["initial"] == [2, 0]
    fid = from_ground["final_upper"]  # |2,2> population after the pi pulse
    change = spectator["max_change_initial"]
    ok = fid >= 0.999 and change < 1e-8
    record_criterion(5, ok, f"|0,0> -> |2,2> pi-pulse fidelity = {fid:.9f}, "
                            f"max |2,0> population change = {change:.2e}")
    assert ok


def test_criterion_6_cirac_zoller_cnot():
    r = run_preset("cz-cnot")
    realized = np.array(r["realized_abs"]) * np.exp(1j * np.array(r["realized_phase"]))
    oracle = cnot_oracle()
    rows = [abs(np.vdot(oracle[:, k], realized[:, k])) ** 2 for k in range(4)]
    plus = np.array([1, 0, 1, 0]) / math.sqrt(2)  # (|down> + |up>)|down> / sqrt 2
    sup = abs(np.vdot(oracle @ plus, realized @ plus)) ** 2
    ok = min(rows) >= 0.999 and sup >= 0.999 and config.load(
        config.preset_path("cz-cnot"))["scenario"] == "gate-cz"
    record_criterion(6, ok, f"truth-table rows vs oracle min = {min(rows):.9f}, "
                            f"superposition -> Bell = {sup:.9f}")
    assert ok


def test_criterion_7_sm_thermal_robustness():
    r = run_preset("sm-thermal")
    fids = {row["n_bar"]: row["fidelity"] for row in r["rows"]}
    spread = max(fids.values()) - min(fids.values())
    ok = set(fids) == {0.0, 0.5, 2.0} and spread < 0.01
    record_criterion(7, ok, "fidelity " + ", ".join(f"n={k}: {v:.6f}" for k, v in fids.items())
                     + f"; spread = {spread:.1e}")
    assert ok


def _wilson(correct, n, level=0.999):
    ci = stats.binomtest(int(correct), int(n)).proportion_ci(level, method="wilson")
    return ci.low, ci.high


def test_criterion_8_readout():
    cfg = config.load(config.preset_path("readout-9994"))
    ro, atom = cfg["readout"], cfg["atom"]
    assert cfg["trials"] >= 100_000 and ro["pulse_infidelity"] <= 0.01 and ro["repetitions"] >= 3
    r = cli.execute(cfg).results
    n = r["trials_per_input"]
    # correlated pulse errors: exact Markov oracle for this preset's curve
    curve_ok = True
    for row in r["repetition_curve"]:
        ed, eu = readout_markov_oracle(ro["pulse_infidelity"], row["repetitions"],
                                       atom["bright_mean"], atom["dark_mean"], atom["threshold"])
        lo, hi = _wilson(2 * n - row["errors_down"] - row["errors_up"], 2 * n)
        curve_ok &= lo <= 1 - 0.5 * (ed + eu) <= hi
    # independent rounds (detection-limited atom): binomial majority-vote oracle
    noisy = AtomicIonModel(bright_mean=6.0, dark_mean=0.5, threshold=3)
    p_bd, p_db = noisy.misclassification()
    reps = (1, 3, 5, 7, 9)
    rows = readout_fidelity_sweep([ReadoutConfig(k) for k in reps], 20_000, seed=8, atom=noisy)
    binom_ok = True
    for k, row in zip(reps, rows):
        expected = 1 - 0.5 * (binomial_majority_error(p_bd, k) + binomial_majority_error(p_db, k))
        lo, hi = _wilson(2 * row.trials - row.error_down - row.error_up, 2 * row.trials)
        binom_ok &= lo <= expected <= hi
    ok = r["fidelity"] >= 0.9994 and curve_ok and binom_ok
    record_criterion(8, ok, f"preset fidelity = {r['fidelity']:.6f} (95% CI low {r['ci_low']:.6f}) "
                            f"over {n} trials/input; curve vs Markov oracle {'ok' if curve_ok else 'off'}, "
                            f"independent-round curve vs binomial {'ok' if binom_ok else 'off'}")
    assert ok


def test_criterion_9_decoherence():
    r = run_preset("decoherence-compare")
    qs = r["quasi_static"]
    sens = qs["sensitivity_ratio"]
    squared_ok = qs["regime"] == "gaussian" and abs(qs["ratio"] / sens**2 - 1) < 0.10
    m0_ok = r["m0_qubit"]["min_coherence"] > 0.999
    window_ok = r["m0_qubit"]["window_s"] >= 1e3 * qs["T2_a"] * (1 - 1e-12)
    moment = r["up_manifold_moment_muN"]
    moment_ok = float(f"{moment:.3g}") == 0.0343 and abs(moment - 0.034) < 5e-4
    ok = squared_ok and m0_ok and window_ok and moment_ok
    detail = (f"quasi-static T2 ratio = {qs['ratio']:.4g} vs (sensitivity ratio)^2 = {sens**2:.4g}, "
              f"sensitivity ratio = {sens:.4g} (squared law holds only under motional narrowing); "
              f"M = 0 min coherence = {r['m0_qubit']['min_coherence']:.6f}; "
              f"|up> moment = {moment:.4f} muN")
    record_criterion(9, ok, detail)
    assert m0_ok and window_ok and moment_ok
    assert squared_ok, (
        "Gaussian dephasing exp(-(dmu sigma t)^2 / 2 hbar^2) gives T2 proportional to 1/dmu, so "
        "the quasi-static T2 ratio equals the sensitivity ratio; the squared law is the "
        "motional-narrowing result (see test_decoherence.py and the decisions ledger)")


def test_criterion_10_scope_note():
    from pathlib import Path

    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    ok = "Reproducibility scope" in readme and "20 s" in readme
    record_criterion(10, ok, "absolute lab coherence times and hardware fidelities are not claimed; "
                             "covered by the property/oracle suite (README: Reproducibility scope)")
    assert ok
