"""Independent reference computations used by the test suite.

Nothing here imports the package's algebra; each oracle is built from
scipy / sympy primitives or closed forms.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import sph_harm_y
from scipy.stats import poisson

# ---------------------------------------------------------------- sphere quadrature


@lru_cache(maxsize=None)
def _grid(n_theta=48, n_phi=64):
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
    return T, P, W


def sphere_element(bra, ket, f):
    """<bra| f(theta, phi) |ket> by Gauss-Legendre x trapezoid quadrature over the sphere."""
    T, P, W = _grid()
    yb = sph_harm_y(bra[0], bra[1], T, P)
    yk = sph_harm_y(ket[0], ket[1], T, P)
    return np.sum(W * np.conj(yb) * f(T, P) * yk)


def quad_cos2(bra, ket):
    return sphere_element(bra, ket, lambda t, p: np.cos(t) ** 2).real


def quad_sin2_exp(bra, ket, sign=+1):
    return sphere_element(bra, ket, lambda t, p: np.sin(t) ** 2 * np.exp(2j * sign * p))


# ---------------------------------------------------------------- 3j symbols


def sympy_3j(*args):
    from sympy.physics.wigner import wigner_3j

    return float(wigner_3j(*args))


# ---------------------------------------------------------------- two-level dynamics


def rabi_two_level(rabi, detuning, t):
    """Excited population for a two-level system from the ground state."""
    W = math.hypot(rabi, detuning)
    return (rabi / W) ** 2 * np.sin(0.5 * W * np.asarray(t)) ** 2


# ---------------------------------------------------------------- gate oracles


def _op(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def cnot_oracle(n_ph=3):
    """Ideal Cirac-Zoller construction on control (2 levels) x target (3 levels: d, u, aux) x phonon.

    Each pulse is the exact exponential of its resonant first-order sideband
    Hamiltonian; the gate is wrapped in target y rotations.  Returns the 4x4
    map on {|dd>, |du>, |ud>, |uu>} x |n=0>.
    """
    a = _op(n_ph)
    I_ph, I_c, I_t = np.eye(n_ph), np.eye(2), np.eye(3)
    # control red sideband: |d, n> <-> |u, n-1>
    sp_c = np.array([[0, 0], [1, 0]])
    H_c = np.kron(np.kron(sp_c, I_t), a)
    H_c = H_c + H_c.conj().T
    # target red sideband d -> aux
    s_aux = np.zeros((3, 3))
    s_aux[2, 0] = 1
    H_t = np.kron(np.kron(I_c, s_aux), a)
    H_t = H_t + H_t.conj().T
    # target y rotation on d/u
    Y = np.zeros((3, 3), dtype=complex)
    Y[0, 1], Y[1, 0] = -1j, 1j
    Ry = lambda th: np.kron(np.kron(I_c, expm(-0.5j * th * Y)), I_ph)
    pulse = lambda H, area: expm(-0.5j * area * H)
    U = Ry(math.pi / 2) @ pulse(H_c, math.pi) @ pulse(H_t, 2 * math.pi) @ pulse(H_c, math.pi) @ Ry(-math.pi / 2)
    idx = [np.ravel_multi_index((c, t, 0), (2, 3, n_ph)) for c in (0, 1) for t in (0, 1)]
    return U[np.ix_(idx, idx)]


def ideal_cnot():
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def sm_effective_oracle(delta, F, T):
    """Closed-form SM propagator at loop closure: exp(i (2 pi F^2 / delta^2) Sx^2) with Sx = X1 + X2."""
    X = np.array([[0, 1], [1, 0]])
    Sx = np.kron(X, np.eye(2)) + np.kron(np.eye(2), X)
    loops = T * delta / (2 * math.pi)
    return expm(1j * loops * 2 * math.pi * F**2 / delta**2 * Sx @ Sx)


# ---------------------------------------------------------------- readout


def binomial_majority_error(p, n):
    """Sum of C(n,k) p^k (1-p)^(n-k) over k >= ceil(n/2) (ties count as errors)."""
    need = math.ceil(n / 2)
    return sum(math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(need, n + 1))


def readout_markov_oracle(eps, n_rounds, bright, dark, threshold):
    """Exact assignment error for |down> and |up> inputs with under-rotated sideband pulses.

    Hidden state for the |up> input: rotor in |up> or |read>.  Odd rounds try
    up -> read, even rounds read -> up; success (prob 1 - eps) deposits a
    phonon, which the atom pulse converts to a dark atom with prob 1 - eps.
    Returns (error_down, error_up) under majority vote with ties -> "down".
    """
    p_bd = poisson.cdf(threshold - 1, bright)  # bright read as dark
    p_db = poisson.sf(threshold - 1, dark)  # dark read as bright
    # |down>: atom always bright; vote wrong if read dark
    err_down = sum(math.comb(n_rounds, k) * p_bd**k * (1 - p_bd) ** (n_rounds - k)
                   for k in range(0, n_rounds + 1) if 2 * (n_rounds - k) < n_rounds)
    # |up>: dynamic programming over (location, bright votes)
    dist = {("up", 0): 1.0}
    for r in range(n_rounds):
        source = "up" if r % 2 == 0 else "read"
        other = "read" if source == "up" else "up"
        new = {}
        for (loc, votes), pr in dist.items():
            branches = []
            if loc == source:
                branches.append((other, True, 1 - eps))
                branches.append((loc, False, eps))
            else:
                branches.append((loc, False, 1.0))
            for new_loc, phonon, pb in branches:
                p_dark = (1 - eps) if phonon else 0.0
                p_bright_vote = p_dark * p_db + (1 - p_dark) * (1 - p_bd)
                for bright_vote, pv in ((1, p_bright_vote), (0, 1 - p_bright_vote)):
                    key = (new_loc, votes + bright_vote)
                    new[key] = new.get(key, 0.0) + pr * pb * pv
        dist = new
    err_up = sum(pr for (loc, votes), pr in dist.items() if 2 * votes >= n_rounds)
    return err_down, err_up


# ---------------------------------------------------------------- dephasing


def gaussian_coherence(delta_mu, sigma_B, t, hbar=1.054571817e-34):
    return np.exp(-((delta_mu * sigma_B * np.asarray(t)) ** 2) / (2 * hbar**2))
