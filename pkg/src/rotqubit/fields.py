"""Synthesized two-beam Raman drives and their carrier-averaged couplings.

Two beams of equal amplitude E0/2 and frequencies w1, w2 superpose to a field
oscillating at the optical carrier (w1 + w2)/2 with a slow envelope at half the
beat w1 - w2.  The polarizability interaction -1/2 Delta_alpha E^2 (e.n)^2 only
sees E^2 averaged over the carrier, which leaves a static light-shift part and
a part oscillating at the beat frequency:

* parallel linear (z) pair:  -A cos^2(theta) [1 + cos(beat t + 2 phi)]
* counter-rotating circular pair:  -A sin^2(theta) [1 + cos(2 phi_mol - beat t - 2 phi)]

with A = Delta_alpha E0^2 / 8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import constants as const

LINEAR = "linear"
ROTATING = "rotating"
CO_PROPAGATING = "co"
COUNTER_PROPAGATING = "counter"

_KINDS = (LINEAR, ROTATING)
_GEOMETRIES = (CO_PROPAGATING, COUNTER_PROPAGATING)


def intensity_to_E0sq(intensity):
    """Intensity in W/cm^2 -> squared synthesized amplitude E0^2 in V^2/m^2.

    Uses I = eps0 c E0^2 / 2.
    """
    if np.any(np.asarray(intensity) < 0):
        raise ValueError("intensity must be non-negative")
    return 2.0 * const.w_per_cm2_to_si(intensity) / (const.EPS0 * const.C_LIGHT)


def E0sq_to_intensity(E0_sq):
    return E0_sq * const.EPS0 * const.C_LIGHT / 2.0 / 1e4


@dataclass(frozen=True)
class EffectiveCoupling:
    """Carrier-averaged interaction of one synthesized drive with a rotor.

    ``amplitude`` is A = Delta_alpha E0^2 / 8 in joules.  The interaction is
    ``S + R exp(-i(beat t + 2 phase)) + h.c.`` with ``S = -A O_static`` and
    ``R = -(A/2) O_resonant``; see :meth:`static_operator` and
    :meth:`resonant_operator`.
    """

    operator_class: str
    amplitude: float
    beat: float
    phase: float = 0.0
    static: bool = True

    def __post_init__(self):
        if self.operator_class not in ("cos2", "sin2_exp2iphi"):
            raise ValueError(f"unknown operator class {self.operator_class!r}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    @property
    def rate(self):
        """A / hbar in rad/s."""
        return self.amplitude / const.HBAR

    def static_operator(self, basis):
        """Static light-shift operator in rad/s (zero when ``static`` is off)."""
        if not self.static:
            return np.zeros((len(basis), len(basis)))
        if self.operator_class == "cos2":
            return -self.rate * basis.cos2
        return -self.rate * basis.sin2

    def resonant_operator(self, basis):
        """R in rad/s, drive phase included: H contains R exp(-i beat t) + h.c."""
        phase = np.exp(-2j * self.phase)
        if self.operator_class == "cos2":
            return -0.5 * self.rate * phase * basis.cos2
        return -0.5 * self.rate * phase * basis.sin2_raise

    def hamiltonian(self, basis, t):
        """Full interaction operator (rad/s) at time t, lab frame."""
        R = self.resonant_operator(basis) * np.exp(-1j * self.beat * t)
        return self.static_operator(basis) + R + R.conj().T


def synthesize_linear_pair(E0_sq, beat, phase=0.0, detuning=0.0, *, delta_alpha_si, static=True):
    """Coupling of the parallel z-polarized pair (Delta M = 0, Delta J = 0, +-2)."""
    if not beat > 0:
        raise ValueError("beat frequency must be positive")
    return EffectiveCoupling("cos2", delta_alpha_si * E0_sq / 8.0, beat, phase, static)


def synthesize_rotating_pair(E0_sq, beat, phase=0.0, detuning=0.0, *, delta_alpha_si, static=True):
    """Coupling of the counter-rotating circular pair (resonant part Delta M = +-2)."""
    if not beat > 0:
        raise ValueError("beat frequency must be positive")
    return EffectiveCoupling("sin2_exp2iphi", delta_alpha_si * E0_sq / 8.0, beat, phase, static)


@dataclass(frozen=True)
class SynthesizedDrive:
    """A two-beam Raman drive with a rectangular envelope.

    ``beat`` is the actual frequency difference w1 - w2 (rad/s); ``detuning``
    records the intended offset from the addressed transition (0 carrier,
    -nu red sideband, +nu blue sideband) and is informational.  ``targets``
    names the rotor factors the beams illuminate.
    """

    kind: str
    E0_sq: float
    beat: float
    phase: float = 0.0
    detuning: float = 0.0
    geometry: str = CO_PROPAGATING
    start: float = 0.0
    duration: float = math.inf
    targets: tuple = ("rotor",)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.geometry not in _GEOMETRIES:
            raise ValueError(f"geometry must be one of {_GEOMETRIES}")
        if self.E0_sq < 0:
            raise ValueError("E0_sq must be non-negative")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if isinstance(self.targets, str):
            object.__setattr__(self, "targets", (self.targets,))

    @property
    def stop(self):
        return self.start + self.duration

    def coupling(self, molecule, static=True):
        make = synthesize_linear_pair if self.kind == LINEAR else synthesize_rotating_pair
        return make(
            self.E0_sq, self.beat, self.phase, self.detuning,
            delta_alpha_si=molecule.delta_alpha_si, static=static,
        )

    def shifted(self, start):
        return replace(self, start=start)


def linear_pair_field(t, E0, carrier, beat, phase=0.0):
    """Exact synthesized z field: E0 cos(carrier t) cos(beat t / 2 + phase)."""
    return E0 * np.cos(carrier * t) * np.cos(0.5 * beat * t + phase)


def rotating_pair_field(t, E0, carrier, beat, phase=0.0):
    """Exact synthesized field (Ex, Ey) with polarization rotating at beat / 2."""
    env = E0 * np.cos(carrier * t)
    arg = 0.5 * beat * t + phase
    return env * np.cos(arg), env * np.sin(arg)


def averaged_field_sq(t, E0_sq, beat, phase=0.0):
    """Carrier-averaged E^2 of the linear pair: E0^2 (1 + cos(beat t + 2 phase)) / 4."""
    return 0.25 * E0_sq * (1.0 + np.cos(beat * t + 2.0 * phase))
