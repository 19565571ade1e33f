"""Shared motional mode of two co-trapped ions: phonon operators, first-order
Lamb-Dicke sideband couplings and thermal occupation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constants as const

CARRIER = "carrier"
RED = "red"
BLUE = "blue"
BRANCHES = (CARRIER, RED, BLUE)


@dataclass(frozen=True)
class MotionalMode:
    """Single shared axial mode.

    Defaults (nu = 2 pi x 1 MHz, eta = 0.1) are typical trap figures and are
    configuration, not molecular physics.
    """

    nu: float = const.TWO_PI * 1e6
    n_max: int = 5
    eta: float = 0.1

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("mode frequency must be positive")
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")
        if not 0 <= self.eta < 1:
            raise ValueError("Lamb-Dicke parameter must lie in [0, 1)")

    @property
    def dim(self):
        return self.n_max + 1

    def eta_for(self, geometry):
        """Co-propagating beams carry no momentum kick; counter-propagating use ``eta``."""
        return 0.0 if geometry == "co" else self.eta

    def annihilation(self):
        return np.diag(np.sqrt(np.arange(1, self.dim, dtype=float)), k=1)

    def number(self):
        return np.diag(np.arange(self.dim, dtype=float))

    def energies(self):
        return self.nu * np.arange(self.dim, dtype=float)


@dataclass(frozen=True)
class ThermalState:
    n_bar: float
    weights: np.ndarray
    tail_mass: float

    @property
    def mean(self):
        return float(np.dot(np.arange(len(self.weights)), self.weights))


def thermal_state(n_bar, n_max):
    """Geometric (Bose-Einstein) phonon distribution truncated at n_max.

    ``tail_mass`` is the probability discarded above n_max before renormalizing.
    """
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    n = np.arange(n_max + 1)
    if n_bar == 0:
        w = (n == 0).astype(float)
        return ThermalState(0.0, w, 0.0)
    q = n_bar / (n_bar + 1.0)
    w = (1.0 - q) * q**n
    tail = q ** (n_max + 1)
    return ThermalState(float(n_bar), w / w.sum(), float(tail))


def sideband_coupling(internal_op, mode, branch, eta=None):
    """Joint internal (x) phonon operator for one Lamb-Dicke branch.

    ``internal_op`` is the resonant (raising) part R of a drive, so that the
    Hamiltonian contains ``O exp(-i beat t) + O^dagger exp(+i beat t)`` with
    ``O`` the returned operator:

    * carrier: R (x) 1
    * red:     i eta R (x) a       (internal raise, n -> n - 1)
    * blue:    i eta R (x) a^dag   (internal raise, n -> n + 1)

    The factor i comes from expanding exp(i eta (a + a^dag)) to first order.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    eta = mode.eta if eta is None else eta
    internal_op = np.asarray(internal_op)
    if branch == CARRIER:
        return np.kron(internal_op, np.eye(mode.dim))
    if eta == 0:
        raise ValueError(f"{branch} sideband requested with eta = 0 (co-propagating beams)")
    a = mode.annihilation()
    ph = a if branch == RED else a.T
    return 1j * eta * np.kron(internal_op, ph)


def sideband_rabi(rabi, eta, n, branch):
    """Sideband Rabi rate for the |n> -> |n -+ 1> transition."""
    if branch == CARRIER:
        return rabi
    if branch == RED:
        return rabi * eta * math.sqrt(n)
    return rabi * eta * math.sqrt(n + 1)
