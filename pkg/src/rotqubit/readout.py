"""Quantum-logic readout of a rotor qubit through a co-trapped atomic ion.

One round: (1) reset the shared mode to n = 0, (2) reset the atom to
|down_atom>, (3) rotor sideband pulse (blue |up> -> |read> in odd rounds, red
|read> -> |up> in even rounds) which deposits a phonon iff the rotor was in
the qubit's upper manifold, (4) atom red sideband |down_atom, 1> ->
|up_atom, 0>, (5) fluorescence detection.  Fluorescence means the atom is in
|down_atom>, which is assigned to rotor outcome "down".  Rounds are combined
by majority vote.

Nothing in the model decays: |read> is a rotational level with no
spontaneous channel, so no loss operator exists anywhere in this module.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import expm

from . import constants as const
from .angular import DOWN, UP, RotBasisState, RotorBasis, NS2_PLUS
from .dynamics import (
    JointBasis, JointState, build_hamiltonian, evolve, phonon_factor, qubit_factor,
    rotor_factor, E0sq_for_rabi,
)
from .fields import COUNTER_PROPAGATING, LINEAR, SynthesizedDrive
from .motion import MotionalMode

OUTCOMES = ("down", "up")
CHUNK = 1000  # trials per RNG stream


@dataclass(frozen=True)
class AtomicIonModel:
    """Two-level atomic ion with Poisson fluorescence statistics.

    ``omega`` (atomic qubit splitting), ``eta`` and ``rabi`` only matter when
    pulses are integrated rather than applied as ideal unitaries.
    """

    bright_mean: float = 20.0
    dark_mean: float = 0.5
    threshold: int = 5
    omega: float = const.TWO_PI * 12.6e9
    eta: float = 0.1
    rabi: float = const.TWO_PI * 1e5

    def __post_init__(self):
        if self.dark_mean < 0:
            raise ValueError("dark mean must be non-negative")
        if not self.bright_mean > self.dark_mean:
            raise ValueError("bright mean must exceed dark mean")
        if not self.dark_mean < self.threshold <= self.bright_mean:
            raise ValueError("threshold must lie between the dark and bright means")

    def misclassification(self, threshold=None):
        """(P(bright atom read as dark), P(dark atom read as bright)) from Poisson tails."""
        k = self.threshold if threshold is None else threshold
        return (float(stats.poisson.cdf(k - 1, self.bright_mean)),
                float(stats.poisson.sf(k - 1, self.dark_mean)))


@dataclass(frozen=True)
class ReadoutConfig:
    """Repetitive readout settings.

    ``pulse_infidelity`` is injected into every sideband pulse as an
    under-rotation with transfer probability 1 - infidelity.
    ``cooling_error`` / ``prep_error`` are probabilities that the reset of
    step (1) leaves one phonon / step (2) leaves the atom in |up_atom>.
    """

    repetitions: int = 1
    pulse_infidelity: float = 0.0
    cooling_error: float = 0.0
    prep_error: float = 0.0
    read_state: RotBasisState = RotBasisState(4, 0)
    decision: str = "majority"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for name in ("pulse_infidelity", "cooling_error", "prep_error"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.decision != "majority":
            raise ValueError("only majority vote is supported")
        if self.read_state in (DOWN, UP):
            raise ValueError("read state must differ from the qubit states")


def readout_basis(molecule=NS2_PLUS, atom=AtomicIonModel(), read_state=RotBasisState(4, 0),
                  mode=MotionalMode(n_max=2)):
    rb = RotorBasis(max(read_state.J + read_state.J % 2, 2))
    return JointBasis([rotor_factor("rotor", rb, molecule), qubit_factor("atom", atom.omega),
                       phonon_factor("ph", mode)])


def majority_vote(down_votes, rounds):
    """Outcome "down" iff at least half of the rounds were bright (ties go to "down")."""
    return np.where(2 * np.asarray(down_votes) >= rounds, 0, 1)


def majority_vote_error(p, n):
    """P(majority wrong) for n independent rounds each wrong with probability p.

    Ties (even n) count as wrong, which is the conservative side for an input
    whose correct answer is "up".
    """
    need = (n + 1) // 2 if n % 2 else n // 2
    # sf is stable for subnormal p where summing pmf terms overflows
    return float(stats.binom.sf(need - 1, n, p))


def _rotation(H, area):
    return expm(-0.5j * area * H)


def _area(infidelity):
    return 2.0 * math.asin(math.sqrt(1.0 - infidelity))


class _Ops:
    """Ideal first-order sideband unitaries on rotor (x) atom (x) phonon."""

    def __init__(self, basis: JointBasis, read_state, infidelity):
        rb = basis.factor("rotor").rotor
        if read_state not in rb:
            raise ValueError(f"read state {read_state} not in the rotor basis")
        dr = len(rb)
        mode = basis.factor("ph").mode
        a = mode.annihilation()
        up, rd = rb.index(UP), rb.index(read_state)
        s = np.zeros((dr, dr))
        s[rd, up] = 1.0  # |read><up|
        sa = np.array([[0.0, 0.0], [1.0, 0.0]])  # |up_atom><down_atom|
        area = _area(infidelity)
        blue = basis.embed({"rotor": s, "ph": a.T}).toarray()
        red = basis.embed({"rotor": s.T, "ph": a.T}).toarray()
        atom = basis.embed({"atom": sa, "ph": a}).toarray()
        self.blue = _rotation(blue + blue.T, area)
        self.red = _rotation(red + red.T, area)
        self.atom = _rotation(atom + atom.T, area)


class _IntegratedOps:
    """Same pulses obtained by integrating the drive Hamiltonians (single-shot validation)."""

    def __init__(self, basis, read_state, infidelity, molecule, atom, rwa_cutoff=None, tol=1e-9):
        mode = basis.factor("ph").mode
        area = _area(infidelity)
        cutoff = 0.5 * mode.nu if rwa_cutoff is None else rwa_cutoff
        dim = basis.dim
        eye = np.eye(dim, dtype=complex)

        def rotor_pulse(offset):
            sb = atom.rabi * mode.eta
            E0_sq = E0sq_for_rabi(molecule, atom.rabi, LINEAR, UP, read_state)
            beat = molecule.energy(read_state.J) - molecule.energy(UP.J) + offset
            d = SynthesizedDrive(LINEAR, E0_sq, beat, 0.0, offset, COUNTER_PROPAGATING,
                                 0.0, area / sb, ("rotor",))
            spec = build_hamiltonian(molecule, [d], basis, rwa_cutoff=cutoff, light_shift=False)
            return evolve(eye, spec, [0.0, d.duration], tol=tol)[-1]

        self.blue = rotor_pulse(mode.nu)
        self.red = rotor_pulse(-mode.nu)
        sa = np.array([[0.0, 0.0], [1.0, 0.0]])
        op = 0.5 * atom.rabi * mode.eta * basis.embed({"atom": sa, "ph": mode.annihilation()})
        spec = build_hamiltonian(molecule, [], basis, rwa_cutoff=cutoff,
                                 extra_terms=[(op, atom.omega - mode.nu, 0.0, math.inf)])
        self.atom = evolve(eye, spec, [0.0, area / (atom.rabi * mode.eta)], tol=tol)[-1]


def _measure_reset(psi, axis, rng, reset_to, flip_prob):
    """Projectively measure one tensor axis per trial, then move the result to ``reset_to``
    (or the other of levels 0/1 with probability ``flip_prob``)."""
    n = psi.shape[0]
    p = np.sum(np.abs(np.moveaxis(psi, axis, 1).reshape(n, psi.shape[axis], -1)) ** 2, axis=2)
    p /= p.sum(axis=1, keepdims=True)
    k = (rng.random(n)[:, None] > np.cumsum(p, axis=1)[:, :-1]).sum(axis=1)
    moved = np.moveaxis(psi, axis, 1)
    picked = moved[np.arange(n), k]
    picked = picked / np.sqrt(p[np.arange(n), k]).reshape((n,) + (1,) * (picked.ndim - 1))
    out = np.zeros_like(moved)
    target = np.full(n, reset_to)
    if flip_prob > 0:
        target = np.where(rng.random(n) < flip_prob, 1 - reset_to, reset_to)
    out[np.arange(n), target] = picked
    return np.moveaxis(out, 1, axis), k


def _run_chunk(psi0, basis, ops, atom, config, rng):
    """Vectorized repetitive readout of ``psi0`` (n, dim). Returns (outcomes, counts, final psi)."""
    n = psi0.shape[0]
    shape = (n,) + basis.dims  # rotor, atom, phonon
    psi = psi0.reshape(shape).astype(complex)
    counts = np.zeros((n, config.repetitions), dtype=np.int64)
    for r in range(config.repetitions):
        psi, _ = _measure_reset(psi, 3, rng, 0, config.cooling_error)
        psi, _ = _measure_reset(psi, 2, rng, 0, config.prep_error)
        U3 = ops.blue if r % 2 == 0 else ops.red
        flat = psi.reshape(n, -1) @ U3.T
        flat = flat @ ops.atom.T
        psi = flat.reshape(shape)
        # detection: project the atom without resetting it
        p_down = np.sum(np.abs(psi[:, :, 0, :]) ** 2, axis=(1, 2))
        bright = rng.random(n) < p_down
        keep = np.where(bright, 0, 1)
        proj = np.zeros_like(psi)
        proj[np.arange(n), :, keep, :] = psi[np.arange(n), :, keep, :]
        norm = np.sqrt(np.where(bright, p_down, 1.0 - p_down))
        psi = proj / norm[:, None, None, None]
        lam = np.where(bright, atom.bright_mean, atom.dark_mean)
        counts[:, r] = rng.poisson(lam)
    votes = (counts >= atom.threshold).sum(axis=1)
    return majority_vote(votes, config.repetitions), counts, psi.reshape(n, -1)


def _rng(seed, stream):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def _initial(basis, state):
    """Full joint amplitude vector from a rotor state (label or rotor amplitudes) or JointState."""
    if isinstance(state, JointState):
        if state.basis != basis:
            raise ValueError("state basis does not match the readout basis")
        return state.amplitudes
    rb = basis.factor("rotor").rotor
    rot = np.zeros(len(rb), dtype=complex)
    if isinstance(state, RotBasisState):
        rot[rb.index(state)] = 1.0
    else:
        rot[:] = state
    at = np.array([1.0, 0.0])
    ph = np.zeros(basis.dims[2])
    ph[0] = 1.0
    return np.kron(np.kron(rot, at), ph)


def _check_basis(basis):
    for name in ("rotor", "atom", "ph"):
        if not basis.has(name):
            raise ValueError(f"readout basis needs a {name!r} factor")


def _ops_for(basis, config, method, molecule, atom):
    if method == "ideal":
        return _Ops(basis, config.read_state, config.pulse_infidelity)
    if method == "integrate":
        if config.read_state not in basis.factor("rotor").rotor:
            raise ValueError(f"read state {config.read_state} not in the rotor basis")
        return _IntegratedOps(basis, config.read_state, config.pulse_infidelity, molecule, atom)
    raise ValueError("method must be 'ideal' or 'integrate'")


def readout_protocol(state: JointState, atom: AtomicIonModel, config: ReadoutConfig, seed=0,
                     method="ideal", molecule=NS2_PLUS):
    """Single-shot repetitive readout.

    Returns ``(outcome, post_state, counts)`` with ``outcome`` in {"down", "up"}.
    """
    basis = state.basis
    _check_basis(basis)
    ops = _ops_for(basis, config, method, molecule, atom)
    out, counts, psi = _run_chunk(state.amplitudes[None, :], basis, ops, atom, config, _rng(seed, 0))
    return OUTCOMES[int(out[0])], JointState(psi[0], basis, check=True), counts[0]


def detection_round(atomic_populations, model: AtomicIonModel, rng, threshold=None):
    """Project a two-level atom (populations of down, up), then sample and classify the count.

    Returns ``(count, "bright" | "dark")``; ``threshold`` overrides the model's.
    """
    rng = np.random.default_rng(rng)
    k = model.threshold if threshold is None else threshold
    p_down = float(atomic_populations[0]) / float(np.sum(atomic_populations))
    lam = model.bright_mean if rng.random() < p_down else model.dark_mean
    count = int(rng.poisson(lam))
    return count, ("bright" if count >= k else "dark")


@dataclass
class ReadoutResult:
    input_label: str
    trials: int
    errors: int

    @property
    def error_rate(self):
        return self.errors / self.trials


def simulate_readout(state, atom, config, trials, seed=0, threads=1, basis=None,
                     molecule=NS2_PLUS, method="ideal", expected=None):
    """Monte-Carlo repetitive readout of a rotor state; returns the outcome counts.

    Trials run in chunks of 1000 with one derived RNG stream per chunk, so the
    result does not depend on ``threads``.  ``expected`` (index into OUTCOMES)
    defaults to the input label for |down> / |up>.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    basis = readout_basis(molecule, atom, config.read_state) if basis is None else basis
    _check_basis(basis)
    ops = _ops_for(basis, config, method, molecule, atom)
    psi0 = _initial(basis, state)
    sizes = [min(CHUNK, trials - s) for s in range(0, trials, CHUNK)]

    def job(i):
        batch = np.repeat(psi0[None, :], sizes[i], axis=0)
        out, _, _ = _run_chunk(batch, basis, ops, atom, config, _rng(seed, i))
        return np.bincount(out, minlength=2)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            tallies = list(ex.map(job, range(len(sizes))))
    else:
        tallies = [job(i) for i in range(len(sizes))]
    return np.sum(tallies, axis=0)


@dataclass
class FidelityRow:
    config: ReadoutConfig
    trials: int
    error_down: int
    error_up: int
    fidelity: float
    ci_low: float
    ci_high: float

    def as_dict(self):
        return {
            "repetitions": self.config.repetitions,
            "pulse_infidelity": self.config.pulse_infidelity,
            "trials_per_input": self.trials,
            "errors_down": self.error_down,
            "errors_up": self.error_up,
            "fidelity": self.fidelity,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def assignment_fidelity(atom, config, trials, seed=0, threads=1, molecule=NS2_PLUS):
    """Average of P("down"| |down>) and P("up"| |up>), with a 95 % Wilson interval."""
    basis = readout_basis(molecule, atom, config.read_state)
    t_down = simulate_readout(DOWN, atom, config, trials, seed * 2, threads, basis, molecule)
    t_up = simulate_readout(UP, atom, config, trials, seed * 2 + 1, threads, basis, molecule)
    e_down, e_up = int(t_down[1]), int(t_up[0])
    correct = 2 * trials - e_down - e_up
    ci = stats.binomtest(correct, 2 * trials).proportion_ci(0.95, method="wilson")
    return FidelityRow(config, trials, e_down, e_up, correct / (2 * trials), ci.low, ci.high)


def readout_fidelity_sweep(configs, trials, seed=0, atom=AtomicIonModel(), threads=1,
                           molecule=NS2_PLUS):
    """Assignment fidelity for each configuration (same seed for each grid point)."""
    return [assignment_fidelity(atom, c, trials, seed, threads, molecule) for c in configs]
