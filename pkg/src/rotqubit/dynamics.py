"""Time-dependent Hamiltonian assembly and unitary propagation.

States live on a tensor product of named factors (rotors, an atomic qubit, one
phonon mode).  A :class:`HamiltonianSpec` stores the bare factor energies plus
a list of lab-frame drive terms ``op * exp(-i freq t)`` on rectangular time
windows; every non-static term is stored together with its Hermitian partner,
so the assembled operator is Hermitian by construction.

Propagation uses the fourth-order commutator-free Magnus integrator (two Gauss
points, two exponentials per step), with exact Hermitian exponentials from an
eigendecomposition.  The step count is refined by doubling until two successive
runs agree to the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components

from . import constants as const
from .angular import DOWN, UP, MoleculeParams, RotBasisState, RotorBasis
from .fields import COUNTER_PROPAGATING, LINEAR, SynthesizedDrive
from .motion import MotionalMode


class SimulationError(RuntimeError):
    """Raised when a simulation invariant is violated."""


class NormDriftError(SimulationError):
    pass


class StepSizeError(SimulationError):
    pass


class TruncationError(SimulationError):
    pass


# --------------------------------------------------------------------------- basis


@dataclass(frozen=True, eq=False)
class Factor:
    name: str
    kind: str  # "rotor" | "qubit" | "phonon"
    energies: np.ndarray  # rad/s
    labels: tuple
    rotor: RotorBasis | None = None
    mode: MotionalMode | None = None

    @property
    def dim(self):
        return len(self.labels)

    def index(self, label):
        if self.kind == "rotor":
            return self.rotor.index(label)
        return self.labels.index(label)


def rotor_factor(name, basis: RotorBasis, molecule: MoleculeParams):
    energies = const.TWO_PI * basis.energies(molecule.B0)
    return Factor(name, "rotor", energies, basis.states, rotor=basis)


def qubit_factor(name, omega):
    """Two-level atomic qubit with states "down", "up" split by ``omega`` (rad/s)."""
    return Factor(name, "qubit", np.array([0.0, omega]), ("down", "up"))


def phonon_factor(name, mode: MotionalMode):
    return Factor(name, "phonon", mode.energies(), tuple(range(mode.dim)), mode=mode)


class JointBasis:
    """Ordered tensor-product basis over named factors."""

    def __init__(self, factors):
        self.factors = tuple(factors)
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise ValueError("factor names must be unique")
        self._by_name = {f.name: i for i, f in enumerate(self.factors)}

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        return isinstance(other, JointBasis) and self.signature == other.signature

    def __hash__(self):
        return hash(self.signature)

    @cached_property
    def signature(self):
        return tuple((f.name, f.kind, f.labels) for f in self.factors)

    @property
    def dims(self):
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def has(self, name):
        return name in self._by_name

    def factor(self, name):
        try:
            return self.factors[self._by_name[name]]
        except KeyError:
            raise KeyError(f"basis has no factor named {name!r}") from None

    def position(self, name):
        return self._by_name[name]

    def factors_of_kind(self, kind):
        return [f for f in self.factors if f.kind == kind]

    @cached_property
    def energies(self):
        """Bare energy of every joint basis state (rad/s)."""
        return reduce(lambda acc, f: np.add.outer(acc, f.energies).ravel(), self.factors[1:],
                      self.factors[0].energies.astype(float))

    def index(self, labels):
        """Joint index for a mapping {factor name: label}; every factor must be given."""
        idx = [self.factors[i].index(labels[f.name]) for i, f in enumerate(self.factors)]
        return int(np.ravel_multi_index(idx, self.dims))

    def embed(self, ops):
        """Sparse operator acting as ``ops[name]`` on the named factors, identity elsewhere."""
        unknown = set(ops) - set(self._by_name)
        if unknown:
            raise KeyError(f"basis has no factor(s) {sorted(unknown)}")
        out = None
        for f in self.factors:
            op = sp.csr_matrix(ops[f.name]) if f.name in ops else sp.identity(f.dim, format="csr")
            out = op if out is None else sp.kron(out, op, format="csr")
        return out

    def factor_values(self, name, values):
        """Broadcast per-label values of one factor to the joint basis."""
        pos = self.position(name)
        shape = [1] * len(self.factors)
        shape[pos] = self.dims[pos]
        return np.broadcast_to(np.reshape(values, shape), self.dims).ravel()


def single_rotor_basis(molecule, J_max=16, name="rotor"):
    return JointBasis([rotor_factor(name, RotorBasis(J_max), molecule)])


# --------------------------------------------------------------------------- states


class JointState:
    """Normalized amplitude vector over a :class:`JointBasis`."""

    def __init__(self, amplitudes, basis: JointBasis, check=True):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (basis.dim,):
            raise ValueError(f"expected {basis.dim} amplitudes, got shape {amplitudes.shape}")
        if check and abs(np.linalg.norm(amplitudes) - 1.0) > 1e-10:
            raise ValueError("state is not normalized")
        self.amplitudes = amplitudes
        self.basis = basis

    @classmethod
    def from_labels(cls, basis, components):
        """Build from {label tuple-dict: amplitude}; normalized on the way in.

        ``components`` is a list of ``(labels, amplitude)`` with ``labels`` a
        mapping factor name -> label.
        """
        psi = np.zeros(basis.dim, dtype=complex)
        for labels, amp in components:
            psi[basis.index(labels)] += amp
        return cls(psi / np.linalg.norm(psi), basis)

    @classmethod
    def product(cls, basis, labels):
        return cls.from_labels(basis, [(labels, 1.0)])

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    @property
    def populations(self):
        return np.abs(self.amplitudes) ** 2

    def tensor(self):
        return self.amplitudes.reshape(self.basis.dims)

    def factor_populations(self, name):
        pos = self.basis.position(name)
        p = np.abs(self.tensor()) ** 2
        axes = tuple(i for i in range(p.ndim) if i != pos)
        return p.sum(axis=axes)

    def population(self, name, label):
        f = self.basis.factor(name)
        return float(self.factor_populations(name)[f.index(label)])

    def reduced_density(self, keep):
        """Reduced density matrix on the factors in ``keep`` (basis order)."""
        keep_pos = sorted(self.basis.position(k) for k in keep)
        t = self.tensor()
        rest = [i for i in range(t.ndim) if i not in keep_pos]
        t = np.transpose(t, keep_pos + rest)
        dk = int(np.prod([t.shape[i] for i in range(len(keep_pos))]))
        m = t.reshape(dk, -1)
        return m @ m.conj().T


# --------------------------------------------------------------------------- Hamiltonian


@dataclass(frozen=True, eq=False)
class Term:
    """Lab-frame contribution ``op * exp(-i freq t)`` on [start, stop)."""

    op: sp.csr_matrix
    freq: float
    start: float = -math.inf
    stop: float = math.inf

    def active(self, a, b):
        return self.start <= a and self.stop >= b


@dataclass(eq=False)
class HamiltonianSpec:
    """Hermitian H(t)/hbar in rad/s over a joint basis.

    ``frame`` is "interaction" (bare energies absorbed, each matrix element
    carrying its residual frequency) or "lab".  With ``rwa_cutoff`` set,
    interaction-frame components oscillating faster than the cutoff are
    dropped.
    """

    basis: JointBasis
    terms: list = field(default_factory=list)
    frame: str = "interaction"
    rwa_cutoff: float | None = None

    def __post_init__(self):
        if self.frame not in ("interaction", "lab"):
            raise ValueError("frame must be 'interaction' or 'lab'")

    def add(self, op, freq=0.0, start=-math.inf, stop=math.inf):
        """Add ``op e^{-i freq t}``; its Hermitian partner is added unless op is static Hermitian."""
        op = sp.csr_matrix(op, dtype=complex)
        self.terms.append(Term(op, float(freq), start, stop))
        if freq != 0.0:
            self.terms.append(Term(op.conj().T.tocsr(), -float(freq), start, stop))
        self.__dict__.pop("frame_terms", None)
        return self

    @cached_property
    def frame_terms(self):
        """Terms in the chosen frame as a list of (freq, csr, start, stop)."""
        if self.frame == "lab":
            return self.lab_terms
        E = self.basis.energies
        scale = max(1.0, float(np.max(np.abs(E))) if E.size else 1.0)
        grouped = {}
        for t in self.terms:
            coo = t.op.tocoo()
            if coo.nnz == 0:
                continue
            # element (a, b) picks up exp(i (E_a - E_b) t)
            f = t.freq - (E[coo.row] - E[coo.col])
            keys = _cluster(f, 1e-12 * max(scale, abs(t.freq)))
            for key in np.unique(keys):
                sel = keys == key
                fk = float(key)
                if self.rwa_cutoff is not None and abs(fk) > self.rwa_cutoff:
                    continue
                m = sp.csr_matrix((coo.data[sel], (coo.row[sel], coo.col[sel])), shape=coo.shape)
                k = (fk, t.start, t.stop)
                grouped[k] = grouped[k] + m if k in grouped else m
        return [(f, m, a, b) for (f, a, b), m in grouped.items()]

    @property
    def lab_terms(self):
        E = self.basis.energies
        out = [(0.0, sp.diags(E.astype(complex), format="csr"), -math.inf, math.inf)]
        out.extend((t.freq, t.op, t.start, t.stop) for t in self.terms)
        return out

    def __call__(self, t):
        """Dense H(t) in the chosen frame (rad/s)."""
        H = np.zeros((self.basis.dim, self.basis.dim), dtype=complex)
        for f, m, a, b in self.frame_terms:
            if a <= t < b:
                H += m.toarray() * np.exp(-1j * f * t)
        return H

    def hermiticity_error(self, t):
        H = self(t)
        return float(np.max(np.abs(H - H.conj().T)))

    def breakpoints(self):
        pts = set()
        for _, _, a, b in self.frame_terms:
            pts.update(x for x in (a, b) if math.isfinite(x))
        return sorted(pts)


def _cluster(values, tol):
    """Snap values that agree within tol onto a common representative; tiny values to 0."""
    out = np.array(values, dtype=float)
    order = np.argsort(out)
    sv = out[order]
    rep = sv.copy()
    for i in range(1, len(sv)):
        if sv[i] - sv[i - 1] <= tol:
            rep[i] = rep[i - 1]
    rep[np.abs(rep) <= tol] = 0.0
    out[order] = rep
    return out


def drive_operators(drive: SynthesizedDrive, molecule, basis: JointBasis, target, static=True):
    """Static and sideband-dressed resonant operators of one drive on one rotor factor.

    Returns ``(static, resonant)`` as sparse joint operators (rad/s); the
    Hamiltonian gets ``static + resonant e^{-i beat t} + h.c.``.
    """
    if not basis.has(target):
        raise ValueError(f"drive addressed to factor {target!r} absent from the basis")
    f = basis.factor(target)
    if f.kind != "rotor":
        raise ValueError(f"factor {target!r} is not a rotor")
    coupling = drive.coupling(molecule, static=static)
    S = basis.embed({target: coupling.static_operator(f.rotor)})
    R = basis.embed({target: coupling.resonant_operator(f.rotor)})
    phonons = basis.factors_of_kind("phonon")
    if drive.geometry == COUNTER_PROPAGATING and phonons:
        mode_f = phonons[0]
        eta = mode_f.mode.eta_for(drive.geometry)
        if eta > 0:
            a = mode_f.mode.annihilation()
            X = basis.embed({mode_f.name: a + a.T})
            R = R + 1j * eta * (R @ X)
    return S, R


def build_hamiltonian(molecule, drives, basis, frame="interaction", rwa_cutoff=None,
                      light_shift=True, extra_terms=()):
    """Assemble H(t) = sum_f B0 J(J+1) + nu n + sum_drives V_drive(t).

    Each drive illuminates its ``targets`` during [start, start + duration).
    ``light_shift=False`` removes the static AC-Stark part of every drive.
    ``extra_terms`` is an iterable of ``(op, freq, start, stop)`` added as is.
    """
    spec = HamiltonianSpec(basis, frame=frame, rwa_cutoff=rwa_cutoff)
    for drive in drives:
        for target in drive.targets:
            S, R = drive_operators(drive, molecule, basis, target, static=light_shift)
            if light_shift and S.nnz:
                spec.add(S, 0.0, drive.start, drive.stop)
            if R.nnz:
                spec.add(R, drive.beat, drive.start, drive.stop)
    for op, freq, a, b in extra_terms:
        spec.add(op, freq, a, b)
    return spec


# --------------------------------------------------------------------------- propagation

_SQ3 = math.sqrt(3.0)
_C1, _C2 = 0.5 - _SQ3 / 6.0, 0.5 + _SQ3 / 6.0
_A1, _A2 = (3.0 - 2.0 * _SQ3) / 12.0, (3.0 + 2.0 * _SQ3) / 12.0


def _expmh(X, h):
    w, V = np.linalg.eigh(X)
    return (V * np.exp(-1j * h * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def _tree_product(U):
    """U[n-1] @ ... @ U[1] @ U[0] by pairwise batched products."""
    while len(U) > 1:
        if len(U) % 2:
            U = np.concatenate([U, np.eye(U.shape[-1])[None]], axis=0)
        U = U[1::2] @ U[0::2]
    return U[0]


class _Block:
    """Dense restriction of a term list to one connected component."""

    def __init__(self, idx, terms):
        self.idx = idx
        self.dim = len(idx)
        self.terms = []
        for f, m, a, b in terms:
            sub = m[idx][:, idx].toarray()
            if np.any(sub):
                self.terms.append((f, sub, a, b))

    def key(self, a, b):
        return tuple(k for k, (_, _, s, e) in enumerate(self.terms) if s <= a and e >= b)

    def segment(self, a, b):
        active = [(f, m) for f, m, s, e in self.terms if s <= a and e >= b]
        if not active:
            return np.zeros(0), np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.array([f for f, _ in active]), np.stack([m for _, m in active])


def _scale(freqs, mats):
    if not len(freqs):
        return 0.0
    norm = float(np.max(np.sum(np.abs(mats), axis=(0, 2))))
    return max(float(np.max(np.abs(freqs))), norm)


def _step_unitary(freqs, mats, a, b, rate, refine=1):
    """U(b, a) for one window-constant interval; exact if the operator is static.

    The step count is ``refine`` times the base count ceil((b - a) rate), so
    each refinement level really halves the step.
    """
    d = mats.shape[-1]
    if np.all(freqs == 0.0):
        return _expmh(mats.sum(axis=0), b - a)
    n = refine * max(1, math.ceil((b - a) * rate))
    h = (b - a) / n
    tl = a + h * np.arange(n)
    chunk = max(1, min(n, int(2e6 // (d * d))))
    U = np.eye(d, dtype=complex)
    for s in range(0, n, chunk):
        t = tl[s:s + chunk]
        H1 = np.tensordot(np.exp(-1j * np.outer(t + _C1 * h, freqs)), mats, axes=(1, 0))
        H2 = np.tensordot(np.exp(-1j * np.outer(t + _C2 * h, freqs)), mats, axes=(1, 0))
        first = _expmh(_A2 * H1 + _A1 * H2, h)
        second = _expmh(_A1 * H1 + _A2 * H2, h)
        U = _tree_product(second @ first) @ U
    return U


def _base_frequency(freqs):
    """Common fundamental of the nonzero frequencies, or None if incommensurate."""
    f = np.abs(freqs[freqs != 0.0])
    if not len(f):
        return None
    base = float(np.min(f))
    ratio = f / base
    if np.all(np.abs(ratio - np.round(ratio)) < 1e-9 * np.maximum(ratio, 1.0)):
        return base
    return None


def _unitarize(U):
    """Nearest unitary (polar factor); keeps round-off from compounding under powers."""
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def _matrix_power(U, n, cache):
    out = np.eye(U.shape[0], dtype=complex)
    k = 0
    while n:
        if k not in cache:
            cache[k] = U if k == 0 else cache[k - 1] @ cache[k - 1]
        if n & 1:
            out = cache[k] @ out
        n >>= 1
        k += 1
    return out


_MIN_PERIODS = 8


def _advance_periodic(block, psi, pts, refine, base):
    """Stroboscopic propagation for a periodic H: U(a + nT + tau) = U(a + tau) U(a + T)^n."""
    a = pts[0]
    T = const.TWO_PI / base
    freqs, mats = block.segment(a, pts[-1])
    rate = _scale(freqs, mats)
    rel = np.asarray(pts[1:]) - a
    n_per = np.floor(rel / T).astype(np.int64)
    tau = rel - n_per * T
    marks = sorted(set(tau.tolist()) | {T})
    partial = {0.0: np.eye(block.dim, dtype=complex)}
    prev, U = 0.0, partial[0.0]
    for m in marks:
        if m > prev:
            U = _step_unitary(freqs, mats, a + prev, a + m, rate, refine) @ U
        partial[m] = U
        prev = m
    UT = _unitarize(partial[T])
    cache = {}
    return [partial[t] @ (_matrix_power(UT, int(n), cache) @ psi) for t, n in zip(tau, n_per)]


def _advance(frame_block, lab_block, energies, psi, pts, refine):
    """States at pts[1:] starting from psi at pts[0], within one window-constant run."""
    a, b = pts[0], pts[-1]
    if lab_block is not None:
        freqs, _ = lab_block.segment(a, b)
        base = _base_frequency(freqs)
        if base is not None and (b - a) * base / const.TWO_PI > _MIN_PERIODS:
            if energies is None:
                return _advance_periodic(lab_block, psi, pts, refine, base)
            # interaction-frame amplitudes: psi_I = exp(iEt) psi_L
            psi_lab = np.exp(-1j * energies * a)[:, None] * psi
            out = _advance_periodic(lab_block, psi_lab, pts, refine, base)
            return [np.exp(1j * energies * t)[:, None] * x for t, x in zip(pts[1:], out)]
    freqs, mats = frame_block.segment(a, b)
    rate = _scale(freqs, mats)
    out = []
    for t0, t1 in zip(pts[:-1], pts[1:]):
        if t1 > t0 and len(freqs):
            psi = _step_unitary(freqs, mats, t0, t1, rate, refine) @ psi
        out.append(psi)
    return out


def _run_block(frame_block, lab_block, energies, psi, grid, refine):
    out = [psi]
    i = 0
    while i < len(grid) - 1:
        key = frame_block.key(grid[i], grid[i + 1])
        j = i + 1
        while j < len(grid) - 1 and frame_block.key(grid[j], grid[j + 1]) == key:
            j += 1
        states = _advance(frame_block, lab_block, energies, psi, grid[i:j + 1], refine)
        out.extend(states)
        psi = states[-1]
        i = j
    return out


def evolve(psi0, spec: HamiltonianSpec, times, tol=1e-9, max_refine=2**12):
    """Propagate amplitude column(s) and return them at each of ``times``.

    ``psi0`` has shape (dim,) or (dim, m); ``times[0]`` is the initial time
    and ``times`` must be non-decreasing.  Returns an array of shape
    (len(times),) + psi0.shape.

    Uncoupled components of the Hamiltonian are propagated separately and
    only where the initial amplitudes are nonzero.  Window-constant stretches
    whose lab-frame Hamiltonian is periodic (a single drive, no RWA) are
    propagated stroboscopically; everything else is stepped.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")
    psi0 = np.asarray(psi0, dtype=complex)
    cols = psi0.reshape(psi0.shape[0], -1)
    dim = spec.basis.dim
    if cols.shape[0] != dim:
        raise ValueError("state dimension does not match the Hamiltonian basis")
    t0, t1 = float(times[0]), float(times[-1])
    live = lambda terms: [(f, m, a, b) for f, m, a, b in terms if b > t0 and a < t1]
    terms = live(spec.frame_terms)
    lab_terms = None
    if spec.frame == "lab":
        lab_terms = terms
    elif spec.rwa_cutoff is None:
        lab_terms = live(spec.lab_terms)
    grid = sorted(set(times.tolist()) | {x for x in spec.breakpoints() if t0 < x < t1})
    pos = np.searchsorted(grid, times)

    pattern = sp.csr_matrix((dim, dim))
    for _, m, _, _ in terms + (lab_terms or []):
        pattern = pattern + abs(m)
    _, labels = connected_components(pattern, directed=False)
    occupied = np.unique(labels[np.any(cols != 0, axis=1)])

    result = np.zeros((len(times),) + cols.shape, dtype=complex)
    result[:] = cols
    for comp in occupied:
        idx = np.flatnonzero(labels == comp)
        frame_block = _Block(idx, terms)
        lab_block = energies = None
        if lab_terms is not None:
            lab_block = frame_block if spec.frame == "lab" else _Block(idx, lab_terms)
            if spec.frame == "interaction":
                energies = spec.basis.energies[idx]
        sub = cols[idx]
        refine = 1
        prev = _run_block(frame_block, lab_block, energies, sub, grid, refine)
        while True:
            refine *= 2
            if refine > max_refine:
                raise StepSizeError(f"step refinement exceeded {max_refine}x without reaching tol={tol}")
            cur = _run_block(frame_block, lab_block, energies, sub, grid, refine)
            err = max(float(np.max(np.abs(x - y))) for x, y in zip(cur, prev))
            prev = cur
            if err <= tol:
                break
        for k, p in enumerate(pos):
            result[k][idx] = prev[p]

    n0 = np.linalg.norm(cols, axis=0)
    drift = float(np.max(np.abs(np.linalg.norm(result, axis=1) - n0[None, :])))
    if drift > max(1e-10, 10 * tol):
        raise NormDriftError(f"norm drift {drift:.3e} exceeds tolerance")
    return result.reshape((len(times),) + psi0.shape)


def propagate(state: JointState, spec: HamiltonianSpec, t0, t1, tol=1e-9):
    """Evolve ``state`` from t0 to t1 under ``spec``."""
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if state.basis != spec.basis:
        raise ValueError("state and Hamiltonian are on different bases")
    out = evolve(state.amplitudes, spec, [t0, t1], tol=tol)[-1]
    return JointState(out, state.basis, check=False)


# --------------------------------------------------------------------------- Rabi physics


def transition_element(molecule, kind, lower: RotBasisState, upper: RotBasisState):
    """<upper| O |lower> for the resonant operator of a drive kind (cos^2 or sin^2 e^{2i phi})."""
    from .angular import cos2_matrix_element, sin2_exp2iphi_matrix_element

    if kind == LINEAR:
        return cos2_matrix_element(upper, lower)
    return sin2_exp2iphi_matrix_element(upper, lower, +1)


def rabi_frequency(molecule, E0_sq, kind=LINEAR, lower=DOWN, upper=UP):
    """Closed-form Rabi frequency Delta_alpha E0^2 <upper|O|lower> / (8 hbar) in rad/s."""
    if E0_sq < 0:
        raise ValueError("E0_sq must be non-negative")
    elem = abs(transition_element(molecule, kind, lower, upper))
    return molecule.delta_alpha_si * E0_sq * elem / (8.0 * const.HBAR)


def E0sq_for_rabi(molecule, rabi, kind=LINEAR, lower=DOWN, upper=UP):
    return rabi / rabi_frequency(molecule, 1.0, kind, lower, upper)


def light_shift(molecule, kind, E0_sq, lower, upper):
    """Differential static AC-Stark shift (rad/s) of ``upper`` relative to ``lower``.

    For the z-linear pair on |0,0>/|2,0> this is -(4/21) Delta_alpha E0^2 / (8 hbar),
    about -0.64 times the Rabi frequency, so a resonant drive must track it.
    """
    from .angular import cos2_matrix_element

    rate = molecule.delta_alpha_si * E0_sq / 8.0 / const.HBAR
    if kind == LINEAR:
        diag = lambda s: cos2_matrix_element(s, s)
    else:
        diag = lambda s: 1.0 - cos2_matrix_element(s, s)
    return -rate * (diag(upper) - diag(lower))


def resonant_beat(molecule, kind, E0_sq, lower=DOWN, upper=UP, offset=0.0, compensate=True):
    """Beat frequency resonant with lower -> upper (plus ``offset``), light shift included."""
    beat = molecule.energy(upper.J) - molecule.energy(lower.J) + offset
    if compensate:
        beat += light_shift(molecule, kind, E0_sq, lower, upper)
    return beat


@dataclass
class RabiTrace:
    times: np.ndarray
    populations: np.ndarray  # (samples, rotor states)
    basis: RotorBasis
    norm_drift: float

    def population(self, state):
        return self.populations[:, self.basis.index(state)]

    @property
    def boundary(self):
        return self.populations[:, self.basis.boundary_mask].sum(axis=1)

    def leakage_outside(self, M=0):
        return self.populations[:, self.basis.M_values != M].sum(axis=1)


def simulate_drive(molecule, drive, duration, samples=200, initial=DOWN, J_max=16,
                   frame="interaction", tol=1e-9, light_shift=True, rwa_cutoff=None):
    """Integrate a single rotor under one drive and sample the level populations."""
    rb = RotorBasis(J_max)
    basis = JointBasis([rotor_factor("rotor", rb, molecule)])
    spec = build_hamiltonian(molecule, [drive], basis, frame=frame, light_shift=light_shift,
                             rwa_cutoff=rwa_cutoff)
    psi0 = np.zeros(basis.dim, dtype=complex)
    psi0[rb.index(initial)] = 1.0
    times = drive.start + np.linspace(0.0, duration, samples)
    states = evolve(psi0, spec, times, tol=tol)
    pops = np.abs(states) ** 2
    drift = float(np.max(np.abs(pops.sum(axis=1) - 1.0)))
    return RabiTrace(times, pops, rb, drift)


def simulate_rabi_flopping(molecule, drive, duration, samples=200, **kw):
    """Rabi flopping on |0,0> <-> |2,0> (or whichever transition ``drive`` addresses)."""
    return simulate_drive(molecule, drive, duration, samples, **kw)


def fit_rabi_frequency(times, p_up, guess=None):
    """Fit p(t) = c - a cos(W t + phi) and return (W, stderr) in rad/s."""
    t = np.asarray(times) - times[0]
    p = np.asarray(p_up)
    if guess is None:
        n = len(t)
        spec = np.abs(np.fft.rfft(p - p.mean(), n=16 * n))
        freqs = np.fft.rfftfreq(16 * n, d=t[1] - t[0])
        guess = const.TWO_PI * freqs[np.argmax(spec)]
    model = lambda t, c, a, w, phi: c - a * np.cos(w * t + phi)
    p0 = [p.mean(), 0.5 * (p.max() - p.min()), guess, 0.0]
    popt, pcov = curve_fit(model, t, p, p0=p0, maxfev=20000)
    return abs(popt[2]), float(np.sqrt(pcov[2, 2]))


def linear_drive(molecule, E0_sq, phase=0.0, start=0.0, duration=math.inf, compensate=True,
                 targets=("rotor",)):
    """Resonant co-propagating z-linear pair on |0,0> <-> |2,0>."""
    beat = resonant_beat(molecule, LINEAR, E0_sq, DOWN, UP, compensate=compensate)
    return SynthesizedDrive(LINEAR, E0_sq, beat, phase, 0.0, "co", start, duration, tuple(targets))
