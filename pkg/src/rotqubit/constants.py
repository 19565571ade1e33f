"""Physical constants (CODATA 2018) and unit helpers.

All internal quantities are SI, with frequencies as angular frequencies in rad/s.
"""

import math

HBAR = 1.054571817e-34  # J s
H_PLANCK = 6.62607015e-34  # J s
EPS0 = 8.8541878128e-12  # F/m
C_LIGHT = 299792458.0  # m/s
MU_N = 5.0507837461e-27  # nuclear magneton, J/T
MU_B = 9.2740100783e-24  # Bohr magneton, J/T
G_E = 2.00231930436  # free-electron g-factor magnitude
AMU = 1.66053906660e-27  # kg

TWO_PI = 2.0 * math.pi


def hz_to_angular(f_hz):
    return TWO_PI * f_hz


def angular_to_hz(omega):
    return omega / TWO_PI


def angstrom3_to_si(volume_a3):
    """Polarizability volume in cubic angstrom -> SI polarizability (C m^2 / V).

    alpha_SI = 4 pi eps0 * volume, with the volume in m^3.
    """
    return 4.0 * math.pi * EPS0 * volume_a3 * 1e-30


def w_per_cm2_to_si(intensity):
    return intensity * 1e4
