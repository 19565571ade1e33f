"""Gate protocols on rotor qubits: single-qubit Raman rotations, the
Cirac-Zoller CNOT through |aux> = |2,2>, and the Sorensen-Molmer gate."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .angular import AUX, DOWN, UP, RotorBasis
from .dynamics import (
    JointBasis, JointState, build_hamiltonian, evolve,
    phonon_factor, resonant_beat, rotor_factor, E0sq_for_rabi,
)
from .fields import COUNTER_PROPAGATING, CO_PROPAGATING, LINEAR, ROTATING, SynthesizedDrive
from .motion import CARRIER, RED, MotionalMode, thermal_state

QUBIT = (DOWN, UP)
COMPUTATIONAL = [(a, b) for a in QUBIT for b in QUBIT]  # |dd>, |du>, |ud>, |uu>

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass(frozen=True)
class Pulse:
    """One or more drives sharing a rectangular window."""

    drives: tuple
    branch: str
    label: str = ""

    @property
    def start(self):
        return self.drives[0].start

    @property
    def duration(self):
        return self.drives[0].duration

    @property
    def stop(self):
        return self.start + self.duration


@dataclass
class PulseSequence:
    pulses: list = field(default_factory=list)
    light_shift: bool = False

    @property
    def end(self):
        return self.pulses[-1].stop if self.pulses else 0.0

    @property
    def drives(self):
        return [d for p in self.pulses for d in p.drives]

    def append(self, drives, branch, label=""):
        """Schedule ``drives`` (sharing one duration) right after the last pulse."""
        if isinstance(drives, SynthesizedDrive):
            drives = (drives,)
        start = self.end
        drives = tuple(d.shifted(start) for d in drives)
        if len({d.duration for d in drives}) != 1:
            raise ValueError("drives of one pulse must share a duration")
        self.pulses.append(Pulse(drives, branch, label))
        return self

    def extend(self, other):
        for p in other.pulses:
            self.append(p.drives, p.branch, p.label)
        return self


def _rotation_drive(molecule, angle, phase, rabi, target, light_shift):
    """Resonant co-propagating linear pair realizing exp(-i angle/2 (cos(phase) X + sin(phase) Y))."""
    E0_sq = E0sq_for_rabi(molecule, rabi)
    beat = resonant_beat(molecule, LINEAR, E0_sq, DOWN, UP, compensate=light_shift)
    # H = (rabi/2)(cos a X + sin a Y) with a = pi - 2 phi for drive phase phi
    drive_phase = 0.5 * (math.pi - phase)
    return SynthesizedDrive(LINEAR, E0_sq, beat, drive_phase, 0.0, CO_PROPAGATING,
                            0.0, angle / rabi, (target,))


def single_qubit_gate(angle, phase, molecule, drive_strength, target="rotor", light_shift=False):
    """Rotation by ``angle`` about the equatorial axis at azimuth ``phase``.

    ``drive_strength`` is the carrier Rabi frequency (rad/s).  Angle 0 yields
    an empty sequence.
    """
    if not 0 <= angle <= 2 * math.pi:
        raise ValueError("angle must lie in [0, 2 pi]")
    seq = PulseSequence(light_shift=light_shift)
    if angle > 0:
        seq.append(_rotation_drive(molecule, angle, phase, drive_strength, target, light_shift),
                   CARRIER, f"R({angle:.3g},{phase:.3g})")
    return seq


def ideal_rotation(angle, phase):
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]])
    n = math.cos(phase) * X + math.sin(phase) * Y
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * n


def _sideband_drive(molecule, kind, upper, sideband_rabi, eta, nu, area, target, light_shift,
                    lower=DOWN, branch=RED, phase=0.0):
    E0_sq = E0sq_for_rabi(molecule, sideband_rabi / eta, kind, lower, upper)
    offset = -nu if branch == RED else nu
    beat = resonant_beat(molecule, kind, E0_sq, lower, upper, offset=offset, compensate=light_shift)
    return SynthesizedDrive(kind, E0_sq, beat, phase, offset, COUNTER_PROPAGATING,
                            0.0, area / sideband_rabi, (target,))


def controlled_phase(molecule, mode: MotionalMode, sideband_rabi, control="c", target="t",
                     light_shift=False):
    """Cirac-Zoller controlled-phase: red pi (control), red 2 pi via |aux> (target), red pi (control)."""
    if mode.eta <= 0:
        raise ValueError("Cirac-Zoller gate needs counter-propagating beams (eta > 0)")
    seq = PulseSequence(light_shift=light_shift)
    swap = _sideband_drive(molecule, LINEAR, UP, sideband_rabi, mode.eta, mode.nu, math.pi,
                           control, light_shift)
    loop = _sideband_drive(molecule, ROTATING, AUX, sideband_rabi, mode.eta, mode.nu, 2 * math.pi,
                           target, light_shift)
    seq.append(swap, RED, "control red pi")
    seq.append(loop, RED, "target aux red 2pi")
    seq.append(swap, RED, "control red pi")
    return seq


def cirac_zoller_cnot(molecule, mode, sideband_rabi, carrier_rabi, control="c", target="t",
                      light_shift=False):
    """CNOT = Ry(pi/2)_target . CZ . Ry(-pi/2)_target."""
    seq = single_qubit_gate(math.pi / 2, -math.pi / 2, molecule, carrier_rabi, target, light_shift)
    seq.extend(controlled_phase(molecule, mode, sideband_rabi, control, target, light_shift))
    seq.extend(single_qubit_gate(math.pi / 2, math.pi / 2, molecule, carrier_rabi, target,
                                 light_shift))
    return seq


def sorensen_molmer_gate(molecule, mode, delta, duration=None, ions=("c", "t"), loops=1,
                         light_shift=False):
    """Bichromatic pair at beats w0 +- (nu - delta) on both ions.

    The per-tone Rabi rate follows eta * rabi = delta / 2 (one closed loop per
    2 pi / delta gives the maximally entangling exp(i pi/4 X X)).  The tone
    phase -pi/4 orients the spin operator along x.
    """
    if delta == 0:
        raise ValueError("delta must be nonzero")
    if mode.eta <= 0:
        raise ValueError("Sorensen-Molmer gate needs eta > 0")
    loop_time = 2 * math.pi / abs(delta)
    if duration is None:
        duration = loop_time * loops
    ratio = duration / loop_time
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) == 0:
        warnings.warn("duration is not a multiple of the loop closure time: "
                      "residual spin-motion entanglement", RuntimeWarning, stacklevel=2)
    rabi = abs(delta) / (2 * mode.eta) / math.sqrt(loops)
    E0_sq = E0sq_for_rabi(molecule, rabi)
    drives = []
    for sign in (+1, -1):
        offset = sign * (mode.nu - delta)
        beat = resonant_beat(molecule, LINEAR, E0_sq, DOWN, UP, offset=offset,
                             compensate=light_shift)
        drives.append(SynthesizedDrive(LINEAR, E0_sq, beat, -math.pi / 4, offset,
                                       COUNTER_PROPAGATING, 0.0, duration, tuple(ions)))
    seq = PulseSequence(light_shift=light_shift)
    seq.append(tuple(drives), "bichromatic", "SM")
    return seq


def ms_ideal(theta=math.pi / 4):
    """exp(i theta X(x)X) on two qubits."""
    XX = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))
    return math.cos(theta) * np.eye(4) + 1j * math.sin(theta) * XX


# --------------------------------------------------------------------------- simulation


def two_ion_basis(molecule, mode, J_max=4, names=("c", "t"), phonon="ph"):
    rb = RotorBasis(J_max)
    return JointBasis([rotor_factor(n, rb, molecule) for n in names] + [phonon_factor(phonon, mode)])


def simulate_sequence(seq, molecule, basis, psi0, rwa_cutoff=None, tol=1e-9, t_end=None):
    """Propagate amplitude column(s) through the whole sequence (interaction frame)."""
    spec = build_hamiltonian(molecule, seq.drives, basis, frame="interaction",
                             rwa_cutoff=rwa_cutoff, light_shift=seq.light_shift)
    t_end = seq.end if t_end is None else t_end
    return evolve(psi0, spec, [0.0, t_end], tol=tol)[-1]


def state_fidelity(a: JointState, b: JointState, trace_out=()):
    """|<a|b>|^2, or <b| Tr_{trace_out}(|a><a|) |b> with ``b`` on the kept factors."""
    if not trace_out:
        if a.basis != b.basis:
            raise ValueError("states live on different bases")
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    keep = [f.name for f in a.basis.factors if f.name not in trace_out]
    kept_sig = tuple(s for s in a.basis.signature if s[0] in keep)
    if b.basis.signature != kept_sig:
        raise ValueError("target state must live on the kept factors")
    rho = a.reduced_density(keep)
    v = b.amplitudes
    return float(np.real(np.vdot(v, rho @ v)))


def _qubit_index(basis, names, bits, phonon=None, n=0):
    labels = {names[0]: QUBIT[bits[0]], names[1]: QUBIT[bits[1]]}
    if phonon is not None:
        labels[phonon] = n
    return basis.index(labels)


@dataclass
class GateReport:
    realized: np.ndarray  # 4x4 amplitudes on computational (x) target-phonon subspace
    ideal: np.ndarray
    row_fidelity: np.ndarray
    fidelity: float  # |Tr(U_ideal^dag U)|^2 / 16
    leakage: float
    local_phases: tuple = (0.0, 0.0)
    corrected_fidelity: float = float("nan")
    superposition_fidelity: float = float("nan")
    boundary_population: float = 0.0

    def as_dict(self):
        return {
            "row_fidelity": [float(x) for x in self.row_fidelity],
            "fidelity": float(self.fidelity),
            "leakage": float(self.leakage),
            "local_phases": [float(x) for x in self.local_phases],
            "corrected_fidelity": float(self.corrected_fidelity),
            "superposition_fidelity": float(self.superposition_fidelity),
            "boundary_population": float(self.boundary_population),
        }


def _local_z(phases):
    z = lambda p: np.diag([1.0, np.exp(1j * p)])
    return np.kron(z(phases[0]), z(phases[1]))


def _process_fidelity(U, V):
    return abs(np.trace(U.conj().T @ V)) ** 2 / 16.0


def gate_report(final_cols, basis, ideal, names=("c", "t"), phonon="ph"):
    """Summarize final states of the four computational inputs (columns in COMPUTATIONAL order)."""
    idx = [_qubit_index(basis, names, bits, phonon, 0) for bits in
           ((0, 0), (0, 1), (1, 0), (1, 1))]
    M = final_cols[idx, :]
    rows = np.array([abs(np.vdot(ideal[:, k], M[:, k])) ** 2 for k in range(4)])
    leakage = float(np.max(1.0 - np.sum(np.abs(M) ** 2, axis=0)))
    fid = _process_fidelity(ideal, M)
    res = minimize(lambda p: -_process_fidelity(_local_z(p) @ ideal, M), x0=[0.0, 0.0],
                   method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    phases = tuple(float((p + math.pi) % (2 * math.pi) - math.pi) for p in res.x)
    return GateReport(M, ideal, rows, fid, leakage, phases, float(-res.fun))


def _boundary(cols, basis, names):
    out = 0.0
    for n in names:
        f = basis.factor(n)
        mask = basis.factor_values(n, f.rotor.boundary_mask.astype(float))
        out = max(out, float(np.max(mask @ (np.abs(cols) ** 2))))
    return out


def run_cnot(molecule, mode, sideband_rabi, carrier_rabi, J_max=4, rwa_cutoff=None,
             light_shift=False, tol=1e-9):
    """Simulate the Cirac-Zoller CNOT on all computational inputs from phonon n = 0.

    ``rwa_cutoff`` defaults to nu/2 (resonant couplings only).
    """
    basis = two_ion_basis(molecule, mode, J_max)
    seq = cirac_zoller_cnot(molecule, mode, sideband_rabi, carrier_rabi, light_shift=light_shift)
    cutoff = 0.5 * mode.nu if rwa_cutoff is None else rwa_cutoff
    cols = np.zeros((basis.dim, 5), dtype=complex)
    for k, bits in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        cols[_qubit_index(basis, ("c", "t"), bits, "ph", 0), k] = 1.0
    # fifth column: (|d> + |u>)|d> / sqrt 2
    cols[:, 4] = (cols[:, 0] + cols[:, 2]) / math.sqrt(2)
    check_ground_motion(JointState(cols[:, 4], basis))
    final = simulate_sequence(seq, molecule, basis, cols, cutoff, tol)
    report = gate_report(final[:, :4], basis, CNOT)
    bell = np.zeros(4, dtype=complex)
    bell[[0, 3]] = 1 / math.sqrt(2)
    report.superposition_fidelity = _reduced_qubit_fidelity(final[:, 4], basis, bell)
    report.boundary_population = _boundary(final, basis, ("c", "t"))
    return report, seq


def check_ground_motion(state: JointState, phonon="ph", tol=1e-12):
    p = state.factor_populations(phonon)
    if 1.0 - p[0] > tol:
        raise ValueError("Cirac-Zoller gate requires the motional ground state (n = 0)")


def _reduced_qubit_fidelity(psi, basis, target, names=("c", "t")):
    """<target| rho_qubits |target> with rho traced over everything but the two qubit subspaces."""
    t = psi.reshape(basis.dims)
    fc, ft = basis.factor(names[0]), basis.factor(names[1])
    ic = [fc.index(s) for s in QUBIT]
    it = [ft.index(s) for s in QUBIT]
    sub = t[np.ix_(ic, it)].reshape(4, -1)
    amp = target.conj() @ sub
    return float(np.sum(np.abs(amp) ** 2))


@dataclass
class ThermalGateResult:
    n_bar: float
    fidelity: float
    truncation: float  # thermal-weighted population in the top phonon level
    tail_mass: float


def run_sorensen_molmer(molecule, mode, delta, n_bars=(0.0, 0.5, 2.0), J_max=4, rwa_cutoff=None,
                        light_shift=False, tol=1e-8, loops=1, amplitude_scale=1.0):
    """Sorensen-Molmer gate from |dd> with thermal motion, for each mean phonon number.

    All Fock inputs are propagated together, then weighted thermally.
    ``rwa_cutoff`` defaults to w0/2 so carrier and sideband couplings near the
    trap frequency stay in the model.  ``amplitude_scale`` multiplies the drive
    strength (0 gives the zero-drive check).
    """
    basis = two_ion_basis(molecule, mode, J_max)
    seq = sorensen_molmer_gate(molecule, mode, delta, loops=loops, light_shift=light_shift)
    if amplitude_scale != 1.0:
        seq.pulses = [replace(p, drives=tuple(replace(d, E0_sq=d.E0_sq * amplitude_scale ** 2)
                                              for d in p.drives)) for p in seq.pulses]
    cutoff = 0.5 * molecule.omega0 if rwa_cutoff is None else rwa_cutoff
    cols = np.zeros((basis.dim, mode.dim), dtype=complex)
    for n in range(mode.dim):
        cols[_qubit_index(basis, ("c", "t"), (0, 0), "ph", n), n] = 1.0
    final = simulate_sequence(seq, molecule, basis, cols, cutoff, tol)
    target = ms_ideal() @ np.array([1, 0, 0, 0], dtype=complex)
    per_n = np.array([_reduced_qubit_fidelity(final[:, n], basis, target) for n in range(mode.dim)])
    top = np.array([JointState(final[:, n] / np.linalg.norm(final[:, n]), basis, check=False)
                    .factor_populations("ph")[-1] for n in range(mode.dim)])
    out = []
    for nb in n_bars:
        th = thermal_state(nb, mode.n_max)
        out.append(ThermalGateResult(nb, float(th.weights @ per_n), float(th.weights @ top),
                                     th.tail_mass))
    return out, per_n
