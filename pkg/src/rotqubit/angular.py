"""Rigid-rotor angular momentum algebra.

Basis states |J, M>, rotational energies and the matrix elements of the two
orientation operators that appear in the polarizability interaction:
``cos^2(theta)`` (z-linear light, Delta M = 0) and ``sin^2(theta) exp(+-2i phi)``
(polarization rotating in the x-y plane, Delta M = +-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from . import constants as const


@dataclass(frozen=True, order=True)
class RotBasisState:
    """Angular momentum eigenstate |J, M>."""

    J: int
    M: int = 0

    def __post_init__(self):
        if self.J < 0 or abs(self.M) > self.J:
            raise ValueError(f"invalid rotor state |{self.J},{self.M}>")

    def __str__(self):
        return f"|{self.J},{self.M}>"

    @property
    def label(self):
        return f"J{self.J}M{self.M}"


DOWN = RotBasisState(0, 0)
UP = RotBasisState(2, 0)
AUX = RotBasisState(2, 2)


@dataclass(frozen=True)
class MoleculeParams:
    """Molecular constants.

    Parameters
    ----------
    name : str
    B0 : float
        Rotational constant as a cyclic frequency (Hz).
    delta_alpha : float
        Polarizability anisotropy as a polarizability volume (cubic angstrom).
    g_r : float
        Rotational g-factor (dimensionless).
    mass_amu : float, optional
    """

    name: str
    B0: float
    delta_alpha: float
    g_r: float = 0.0
    mass_amu: float | None = None

    def __post_init__(self):
        if not self.B0 > 0:
            raise ValueError("B0 must be positive")

    @property
    def omega0(self):
        """Qubit gap |0,0> -> |2,0> as an angular frequency (rad/s)."""
        return const.TWO_PI * 6.0 * self.B0

    @property
    def delta_alpha_si(self):
        return const.angstrom3_to_si(self.delta_alpha)

    def energy(self, J):
        """Rotational energy of shell J as an angular frequency (rad/s)."""
        return const.TWO_PI * rot_energy(J, self.B0)


NS2_PLUS = MoleculeParams(name="NS2+", B0=3.44e9, delta_alpha=8.47, g_r=-0.014, mass_amu=78.0)


def rot_energy(J, B0):
    """B0 J (J + 1), in the units of ``B0``."""
    if J < 0:
        raise ValueError("J must be non-negative")
    return B0 * J * (J + 1)


@dataclass(frozen=True)
class RotorBasis:
    """Truncated rotor basis, ordered by ascending J then ascending M.

    With ``even_only`` (the default) only J = 0, 2, ..., J_max are present,
    as for a nonpolar molecule whose nuclear-spin statistics forbid odd J.
    """

    J_max: int = 16
    even_only: bool = True
    states: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.J_max < 0:
            raise ValueError("J_max must be non-negative")
        if self.even_only and self.J_max % 2:
            raise ValueError("J_max must be even for an even-J basis")
        step = 2 if self.even_only else 1
        states = tuple(
            RotBasisState(J, M) for J in range(0, self.J_max + 1, step) for M in range(-J, J + 1)
        )
        object.__setattr__(self, "states", states)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, state):
        return state in self._index

    @cached_property
    def _index(self):
        return {s: i for i, s in enumerate(self.states)}

    def index(self, state):
        try:
            return self._index[state]
        except KeyError:
            raise KeyError(f"{state} not in basis (J_max={self.J_max})") from None

    @cached_property
    def J_values(self):
        return np.array([s.J for s in self.states])

    @cached_property
    def M_values(self):
        return np.array([s.M for s in self.states])

    @cached_property
    def boundary_mask(self):
        """True on the J = J_max shell, used as a truncation check."""
        return self.J_values == self.J_max

    def energies(self, B0):
        return B0 * self.J_values * (self.J_values + 1.0)

    @cached_property
    def cos2(self):
        return _dense(self, lambda b, k: cos2_matrix_element(b, k))

    @cached_property
    def sin2(self):
        # exact in a truncated basis: identity is diagonal
        return np.eye(len(self)) - self.cos2

    @cached_property
    def sin2_raise(self):
        """Matrix of sin^2(theta) exp(+2i phi) (raises M by 2)."""
        return _dense(self, lambda b, k: sin2_exp2iphi_matrix_element(b, k, +1))

    @cached_property
    def sin2_lower(self):
        return _dense(self, lambda b, k: sin2_exp2iphi_matrix_element(b, k, -1))


def _dense(basis, element):
    n = len(basis)
    out = np.zeros((n, n), dtype=complex)
    for i, bra in enumerate(basis.states):
        for j, ket in enumerate(basis.states):
            if abs(bra.J - ket.J) <= 2:
                out[i, j] = element(bra, ket)
    if np.all(out.imag == 0):
        return out.real.copy()
    return out


def _twice(x):
    t = 2 * Fraction(x).limit_denominator(4)
    if t.denominator != 1:
        raise ValueError(f"{x} is not an integer or half-integer")
    return int(t)


@lru_cache(maxsize=4096)
def _wigner3j_doubled(a, b, c, d, e, f):
    # all arguments are twice the quantum numbers
    if d + e + f != 0:
        return 0.0
    if any(abs(m) > j for j, m in ((a, d), (b, e), (c, f))):
        return 0.0
    if any((j + m) % 2 for j, m in ((a, d), (b, e), (c, f))):
        return 0.0
    if c < abs(a - b) or c > a + b or (a + b + c) % 2:
        return 0.0
    fa = math.factorial
    j1, j2, j3 = Fraction(a, 2), Fraction(b, 2), Fraction(c, 2)
    m1, m2, m3 = Fraction(d, 2), Fraction(e, 2), Fraction(f, 2)

    def fi(x):
        return fa(int(x))

    tri = Fraction(fi(j1 + j2 - j3) * fi(j1 - j2 + j3) * fi(-j1 + j2 + j3), fi(j1 + j2 + j3 + 1))
    pref = tri * (fi(j1 + m1) * fi(j1 - m1) * fi(j2 + m2) * fi(j2 - m2) * fi(j3 + m3) * fi(j3 - m3))
    kmin = int(max(0, j2 - j3 - m1, j1 - j3 + m2))
    kmax = int(min(j1 + j2 - j3, j1 - m1, j2 + m2))
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            fa(k)
            * fi(j3 - j2 + k + m1)
            * fi(j3 - j1 + k - m2)
            * fi(j1 + j2 - j3 - k)
            * fi(j1 - k - m1)
            * fi(j2 - k + m2)
        )
        total += Fraction((-1) ** k, den)
    phase = -1 if int(j1 - j2 - m3) % 2 else 1
    # sqrt(pref) * total, with the square root taken last
    value = math.sqrt(pref.numerator) / math.sqrt(pref.denominator) * float(total)
    return phase * value


def wigner3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3-j symbol via the Racah sum in exact rational arithmetic.

    Invalid combinations (triangle rule, m1 + m2 + m3 != 0, |m| > j) return 0.
    """
    return _wigner3j_doubled(*(_twice(x) for x in (j1, j2, j3, m1, m2, m3)))


def tensor_element(bra, ket, k, q):
    """<J' M'| C^k_q |J M> for the renormalized spherical harmonic C^k_q."""
    Jp, Mp, J, M = bra.J, bra.M, ket.J, ket.M
    if Mp != M + q:
        return 0.0
    parity = wigner3j(Jp, k, J, 0, 0, 0)
    if parity == 0.0:
        return 0.0
    sign = -1.0 if Mp % 2 else 1.0
    return sign * math.sqrt((2 * Jp + 1) * (2 * J + 1)) * parity * wigner3j(Jp, k, J, -Mp, q, M)


def cos2_matrix_element(bra, ket):
    """<bra| cos^2(theta) |ket>, using cos^2 = 1/3 + (2/3) P2(cos theta)."""
    if bra.M != ket.M:
        return 0.0
    value = (2.0 / 3.0) * tensor_element(bra, ket, 2, 0)
    if bra == ket:
        value += 1.0 / 3.0
    return value


_SIN2_NORM = math.sqrt(8.0 / 3.0)  # sin^2 e^{+-2i phi} = sqrt(8/3) C^2_{+-2}


def sin2_exp2iphi_matrix_element(bra, ket, sign=+1):
    """<bra| sin^2(theta) exp(2i sign phi) |ket>; nonzero only for M_bra - M_ket = 2 sign."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return _SIN2_NORM * tensor_element(bra, ket, 2, 2 * sign)


def manifold_moment(J, g_r):
    """Rotational magnetic moment g_r sqrt(J (J+1)) in nuclear magnetons."""
    return g_r * math.sqrt(J * (J + 1))
