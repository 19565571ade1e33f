import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotqubit.motion import BLUE, CARRIER, RED, MotionalMode, sideband_coupling, sideband_rabi, thermal_state


def test_mode_validation():
    with pytest.raises(ValueError):
        MotionalMode(nu=0.0)
    with pytest.raises(ValueError):
        MotionalMode(n_max=1)
    with pytest.raises(ValueError):
        MotionalMode(eta=1.0)


def test_geometry_maps_eta():
    m = MotionalMode(eta=0.07)
    assert m.eta_for("co") == 0.0
    assert m.eta_for("counter") == 0.07


def test_thermal_examples():
    assert thermal_state(0.0, 5).weights.tolist() == [1, 0, 0, 0, 0, 0]
    th = thermal_state(1.0, 60)
    assert th.weights[0] == pytest.approx(0.5, abs=1e-15)
    assert th.weights[1] == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        thermal_state(-0.1, 5)


@given(st.floats(0, 5), st.integers(2, 80))
def test_thermal_weights_normalized_and_tail_reported(n_bar, n_max):
    th = thermal_state(n_bar, n_max)
    assert np.all(th.weights >= 0)
    assert th.weights.sum() == pytest.approx(1.0, abs=1e-12)
    q = n_bar / (n_bar + 1)
    assert th.tail_mass == pytest.approx(q ** (n_max + 1), abs=1e-15)


@pytest.mark.parametrize("n_bar", [0.5, 1.0, 2.0])
def test_thermal_mean_direct_sum(n_bar):
    th = thermal_state(n_bar, 200)
    direct = sum(n * n_bar**n / (n_bar + 1) ** (n + 1) for n in range(201))
    assert th.mean == pytest.approx(direct, rel=1e-12)
    assert th.mean == pytest.approx(n_bar, rel=1e-10)


def _R():
    # internal raise on a 2-level system |d> -> |u>
    return np.array([[0.0, 0.0], [1.0, 0.0]])


def test_red_sideband_annihilates_vacuum():
    m = MotionalMode(n_max=4)
    O = sideband_coupling(_R(), m, RED)
    vac_down = np.kron([1, 0], np.eye(m.dim)[0])
    H = O + O.conj().T
    assert np.allclose(H @ vac_down, 0)


def test_blue_sideband_pi_pulse_adds_phonon():
    from scipy.linalg import expm

    m = MotionalMode(n_max=4, eta=0.1)
    rabi = 1.0
    O = 0.5 * rabi * sideband_coupling(_R(), m, BLUE)
    H = O + O.conj().T
    psi = np.kron([1, 0], np.eye(m.dim)[0])
    out = expm(-1j * H * math.pi / (m.eta * rabi)) @ psi
    target = np.kron([0, 1], np.eye(m.dim)[1])
    assert abs(np.vdot(target, out)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_sideband_rates_scale_with_sqrt_n():
    m = MotionalMode(n_max=5)
    O = sideband_coupling(_R(), m, RED)
    e = lambda i, n: np.kron(np.eye(2)[i], np.eye(m.dim)[n])
    r1 = abs(e(1, 0) @ O @ e(0, 1))
    r2 = abs(e(1, 1) @ O @ e(0, 2))
    assert r2 / r1 == pytest.approx(math.sqrt(2), rel=1e-14)
    assert sideband_rabi(1.0, 0.1, 2, RED) / sideband_rabi(1.0, 0.1, 1, RED) == pytest.approx(math.sqrt(2))
    assert sideband_rabi(1.0, 0.1, 0, BLUE) == pytest.approx(0.1)
    assert sideband_rabi(3.0, 0.1, 7, CARRIER) == 3.0


def test_carrier_is_phonon_diagonal_and_hermitian_assembly():
    m = MotionalMode(n_max=4)
    for branch in (CARRIER, RED, BLUE):
        O = sideband_coupling(_R(), m, branch)
        H = O + O.conj().T
        assert np.allclose(H, H.conj().T)
    C = sideband_coupling(_R(), m, CARRIER).reshape(2, m.dim, 2, m.dim)
    off = C.copy()
    for n in range(m.dim):
        off[:, n, :, n] = 0
    assert np.all(off == 0)


def test_sideband_requires_eta():
    with pytest.raises(ValueError):
        sideband_coupling(_R(), MotionalMode(eta=0.0), RED)
    with pytest.raises(ValueError):
        sideband_coupling(_R(), MotionalMode(), "green")
