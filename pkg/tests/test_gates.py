import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import cnot_oracle, ideal_cnot, sm_effective_oracle
from rotqubit import constants as const
from rotqubit.angular import DOWN, NS2_PLUS, UP, RotorBasis
from rotqubit.dynamics import (
    JointBasis, JointState, build_hamiltonian, evolve, phonon_factor, qubit_factor, rotor_factor,
)
from rotqubit.gates import (
    CNOT, check_ground_motion, cirac_zoller_cnot, controlled_phase, gate_report,
    ideal_rotation, ms_ideal, run_cnot, run_sorensen_molmer, simulate_sequence, single_qubit_gate,
    sorensen_molmer_gate, state_fidelity, two_ion_basis,
)
from rotqubit.motion import MotionalMode

M = NS2_PLUS
MODE = MotionalMode(nu=const.TWO_PI * 1e6, n_max=3, eta=0.1)
SB, CAR = const.TWO_PI * 2e4, const.TWO_PI * 1e5


def rotor_basis(J_max=4):
    return JointBasis([rotor_factor("rotor", RotorBasis(J_max), M)])


def qubit_columns(basis):
    cols = np.zeros((basis.dim, 2), dtype=complex)
    cols[basis.index({"rotor": DOWN}), 0] = 1
    cols[basis.index({"rotor": UP}), 1] = 1
    return cols


def realized_2x2(seq, J_max=4, rwa=True):
    b = rotor_basis(J_max)
    cols = qubit_columns(b)
    out = simulate_sequence(seq, M, b, cols, rwa_cutoff=0.5 * M.omega0 if rwa else None, tol=1e-11)
    idx = [b.index({"rotor": DOWN}), b.index({"rotor": UP})]
    return out[idx, :]


# ------------------------------------------------------------------ single-qubit rotations


def test_ideal_rotation_is_unitary_and_pi_flips():
    U = ideal_rotation(math.pi, 0.3)
    assert np.allclose(U.conj().T @ U, np.eye(2))
    assert abs(U[1, 0]) == pytest.approx(1.0)


def test_angle_range_and_zero_angle():
    with pytest.raises(ValueError):
        single_qubit_gate(-0.1, 0.0, M, CAR)
    with pytest.raises(ValueError):
        single_qubit_gate(7.0, 0.0, M, CAR)
    seq = single_qubit_gate(0.0, 0.0, M, CAR)
    assert seq.pulses == [] and seq.end == 0.0


@given(st.floats(0.1, 2 * math.pi), st.floats(-math.pi, math.pi))
def test_single_qubit_gate_matches_ideal_rotation(angle, phase):
    U = realized_2x2(single_qubit_gate(angle, phase, M, CAR))
    assert abs(np.trace(ideal_rotation(angle, phase).conj().T @ U)) / 2 == pytest.approx(1.0, abs=1e-8)


def test_pi_pulse_full_integration_at_1e_minus_3():
    rabi = 1e-3 * M.omega0
    seq = single_qubit_gate(math.pi, 0.0, M, rabi, light_shift=True)
    b = rotor_basis(8)
    psi = np.zeros(b.dim, dtype=complex)
    psi[b.index({"rotor": DOWN})] = 1
    out = simulate_sequence(seq, M, b, psi, rwa_cutoff=None, tol=1e-10)
    assert abs(out[b.index({"rotor": UP})]) ** 2 >= 1 - 1e-4


def test_half_pi_twice_equals_pi():
    two = single_qubit_gate(math.pi / 2, 0.7, M, CAR)
    two.extend(single_qubit_gate(math.pi / 2, 0.7, M, CAR))
    one = single_qubit_gate(math.pi, 0.7, M, CAR)
    U2, U1 = realized_2x2(two), realized_2x2(one)
    assert abs(np.trace(U1.conj().T @ U2)) / 2 == pytest.approx(1.0, abs=1e-8)


def test_pulse_sequence_is_contiguous_and_non_overlapping():
    seq = cirac_zoller_cnot(M, MODE, SB, CAR)
    starts = [p.start for p in seq.pulses]
    stops = [p.stop for p in seq.pulses]
    assert starts[0] == 0.0
    assert all(a == pytest.approx(b) for a, b in zip(starts[1:], stops[:-1]))
    assert all(p.duration > 0 for p in seq.pulses)


# ------------------------------------------------------------------ Cirac-Zoller


def test_oracle_construction_is_cnot():
    assert np.allclose(cnot_oracle(), ideal_cnot(), atol=1e-12)


@pytest.fixture(scope="module")
def cnot_run():
    return run_cnot(M, MODE, SB, CAR)


def test_cnot_truth_table_rows(cnot_run):
    report, _ = cnot_run
    oracle = cnot_oracle()
    for k in range(4):
        assert abs(np.vdot(oracle[:, k], report.realized[:, k])) ** 2 >= 0.999
    assert np.all(report.row_fidelity >= 0.999)
    assert report.leakage < 1e-3
    assert 0 <= report.fidelity <= 1


def test_cnot_superposition_gives_bell_state(cnot_run):
    report, _ = cnot_run
    assert report.superposition_fidelity >= 0.999


def test_cnot_twice_is_identity():
    seq = cirac_zoller_cnot(M, MODE, SB, CAR)
    seq.extend(cirac_zoller_cnot(M, MODE, SB, CAR))
    basis = two_ion_basis(M, MODE)
    cols = np.zeros((basis.dim, 4), dtype=complex)
    for k, (c, t) in enumerate([(DOWN, DOWN), (DOWN, UP), (UP, DOWN), (UP, UP)]):
        cols[basis.index({"c": c, "t": t, "ph": 0}), k] = 1
    final = simulate_sequence(seq, M, basis, cols, rwa_cutoff=0.5 * MODE.nu)
    report = gate_report(final, basis, np.eye(4, dtype=complex))
    assert 1 - report.fidelity < 1e-3


def test_cnot_needs_ground_motion_and_eta():
    basis = two_ion_basis(M, MODE)
    hot = JointState.product(basis, {"c": DOWN, "t": DOWN, "ph": 1})
    with pytest.raises(ValueError):
        check_ground_motion(hot)
    with pytest.raises(ValueError):
        controlled_phase(M, MotionalMode(eta=0.0), SB)


def test_aux_loop_leaves_upper_qubit_level_alone():
    """Full couplings (no RWA, light shift on) during the target's 2 pi loop.

    The loop spans ~1e6 drive periods, so the amplitude tolerance is 1e-7;
    populations are second order in amplitude errors.
    """
    loop = controlled_phase(M, MODE, SB, light_shift=True).pulses[1]
    mode = MotionalMode(MODE.nu, 2, MODE.eta)
    basis = JointBasis([rotor_factor("t", RotorBasis(4), M), phonon_factor("ph", mode)])
    spec = build_hamiltonian(M, loop.drives, basis, frame="interaction", light_shift=True)
    up = np.zeros(basis.dim)
    for k in range(mode.dim):
        up[basis.index({"t": UP, "ph": k})] = 1
    for n in (0, 1):
        psi = np.zeros(basis.dim, dtype=complex)
        psi[basis.index({"t": UP, "ph": n})] = 1
        out = evolve(psi, spec, np.linspace(loop.start, loop.stop, 11), tol=1e-7)
        assert np.max(np.abs((np.abs(out) ** 2) @ up - 1.0)) < 1e-8


# ------------------------------------------------------------------ Sorensen-Molmer


def test_sm_matches_effective_oracle_ground_state():
    mode = MotionalMode(MODE.nu, 6, 0.1)
    delta = mode.nu / 20
    rows, per_n = run_sorensen_molmer(M, mode, delta, n_bars=(0.0,), tol=1e-8)
    target = sm_effective_oracle(delta, delta / 4, 2 * math.pi / delta) @ np.array([1, 0, 0, 0])
    # Sx^2 = 2 + 2 XX, so the oracle equals the ideal gate up to a global phase
    assert abs(np.vdot(target, ms_ideal() @ np.array([1, 0, 0, 0]))) == pytest.approx(1.0, abs=1e-12)
    assert rows[0].fidelity > 0.99
    assert abs(per_n[1] - per_n[0]) < 0.01


def test_sm_zero_drive_is_identity():
    mode = MotionalMode(MODE.nu, 3, 0.1)
    seq = sorensen_molmer_gate(M, mode, mode.nu / 20)
    for p in seq.pulses:
        for d in p.drives:
            object.__setattr__(d, "E0_sq", 0.0)
    basis = two_ion_basis(M, mode)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    out = simulate_sequence(seq, M, basis, psi, rwa_cutoff=0.5 * M.omega0)
    assert np.allclose(out, psi, atol=1e-14)


def test_sm_warns_off_loop_duration():
    with pytest.warns(RuntimeWarning):
        sorensen_molmer_gate(M, MODE, MODE.nu / 20, duration=1.3 * 20 * const.TWO_PI / MODE.nu)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sorensen_molmer_gate(M, MODE, MODE.nu / 20)
    with pytest.raises(ValueError):
        sorensen_molmer_gate(M, MODE, 0.0)


# ------------------------------------------------------------------ fidelity metric


def _qubit_pair_basis():
    return JointBasis([qubit_factor("a", 1.0), qubit_factor("b", 1.0)])


def test_state_fidelity_examples():
    b = JointBasis([qubit_factor("q", 1.0)])
    zero = JointState(np.array([1, 0]), b)
    one = JointState(np.array([0, 1]), b)
    plus = JointState(np.array([1, 1]) / math.sqrt(2), b)
    assert state_fidelity(zero, zero) == pytest.approx(1.0)
    assert state_fidelity(zero, one) == 0.0
    assert state_fidelity(plus, zero) == pytest.approx(0.5)
    other = JointBasis([qubit_factor("r", 1.0)])
    with pytest.raises(ValueError):
        state_fidelity(zero, JointState(np.array([1, 0]), other))


def test_state_fidelity_partial_trace():
    b = _qubit_pair_basis()
    bell = JointState(np.array([1, 0, 0, 1]) / math.sqrt(2), b)
    single = JointBasis([qubit_factor("a", 1.0)])
    assert state_fidelity(bell, JointState(np.array([1, 0]), single), trace_out=("b",)) == pytest.approx(0.5)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=8, max_size=8))
def test_state_fidelity_bounded_and_symmetric(z):
    v = np.array(z)
    a, c = v[:4], v[4:]
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(c) < 1e-3:
        return
    b = _qubit_pair_basis()
    sa, sc = JointState(a / np.linalg.norm(a), b), JointState(c / np.linalg.norm(c), b)
    f = state_fidelity(sa, sc)
    assert -1e-12 <= f <= 1 + 1e-12
    assert f == pytest.approx(state_fidelity(sc, sa), abs=1e-12)


def test_gate_report_reports_local_phases():
    basis = two_ion_basis(M, MODE, J_max=2)
    phases = (0.3, -0.5)
    U = np.kron(np.diag([1, np.exp(1j * phases[0])]), np.diag([1, np.exp(1j * phases[1])])) @ CNOT
    cols = np.zeros((basis.dim, 4), dtype=complex)
    for k, (c, t) in enumerate([(DOWN, DOWN), (DOWN, UP), (UP, DOWN), (UP, UP)]):
        for j, (c2, t2) in enumerate([(DOWN, DOWN), (DOWN, UP), (UP, DOWN), (UP, UP)]):
            cols[basis.index({"c": c2, "t": t2, "ph": 0}), k] = U[j, k]
    rep = gate_report(cols, basis, CNOT)
    assert rep.corrected_fidelity == pytest.approx(1.0, abs=1e-9)
    assert rep.local_phases == pytest.approx(phases, abs=1e-5)
    assert rep.fidelity < 0.99
