"""Rotational-state qubits of trapped nonpolar molecular ions.

Submodules: ``angular`` (rotor algebra), ``fields`` (synthesized Raman
drives), ``motion`` (shared phonon mode), ``dynamics`` (joint-space
propagation), ``gates``, ``readout``, ``decoherence`` and ``cli``.
"""

__version__ = "0.1.0"

from .angular import AUX, DOWN, NS2_PLUS, UP, MoleculeParams, RotBasisState, RotorBasis, wigner3j
from .dynamics import (
    JointBasis, JointState, SimulationError, build_hamiltonian, evolve, propagate, rabi_frequency,
)
from .fields import SynthesizedDrive, intensity_to_E0sq
from .motion import MotionalMode, thermal_state

__all__ = [
    "AUX", "DOWN", "UP", "NS2_PLUS", "MoleculeParams", "RotBasisState", "RotorBasis", "wigner3j",
    "JointBasis", "JointState", "SimulationError", "build_hamiltonian", "evolve", "propagate",
    "rabi_frequency", "SynthesizedDrive", "intensity_to_E0sq", "MotionalMode", "thermal_state",
]
