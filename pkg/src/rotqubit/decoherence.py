"""Magnetic-field-noise dephasing of rotational and electronic-spin qubits.

Only the linear Zeeman term is modeled.  It is diagonal in the |J, M> basis,
so dephasing reduces to accumulating the phase (Delta mu / hbar) int B dt
along sampled field trajectories.  Qubits built from M = 0 levels have zero
linear sensitivity and therefore never decay here; that is a property of the
model (higher-order Zeeman terms are absent), not a physical infinite T2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import curve_fit

from . import constants as const
from .angular import RotBasisState, manifold_moment

ROTATIONAL = "rotational"
ELECTRONIC = "electronic"
CHUNK = 1000
GROUP = 50  # trajectories per jackknife group; groups never straddle RNG chunks


@dataclass(frozen=True)
class NoiseProcess:
    """Stationary Ornstein-Uhlenbeck field noise (tesla, seconds)."""

    sigma_B: float
    tau_c: float
    kind: str = "ou"

    def __post_init__(self):
        if self.sigma_B < 0:
            raise ValueError("sigma_B must be non-negative")
        if not self.tau_c > 0:
            raise ValueError("tau_c must be positive")
        if self.kind != "ou":
            raise ValueError("only Ornstein-Uhlenbeck noise is implemented")

    def scaled(self, factor):
        return NoiseProcess(self.sigma_B * factor, self.tau_c, self.kind)


def _rng(seed, stream=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def sample_noise_trajectory(process: NoiseProcess, dt, n_steps, seed=0, n_traj=None, rng=None):
    """Exact-discretization OU samples B(k dt), k = 0..n_steps, started in the stationary law.

    Returns shape (n_steps + 1,) or (n_traj, n_steps + 1).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = _rng(seed) if rng is None else rng
    m = 1 if n_traj is None else n_traj
    a = math.exp(-dt / process.tau_c)
    b = process.sigma_B * math.sqrt(-math.expm1(-2.0 * dt / process.tau_c))
    xi = rng.standard_normal((m, n_steps + 1))
    out = np.empty_like(xi)
    out[:, 0] = process.sigma_B * xi[:, 0]
    for k in range(1, n_steps + 1):
        out[:, k] = a * out[:, k - 1] + b * xi[:, k]
    return out[0] if n_traj is None else out


@dataclass(frozen=True)
class ZeemanModel:
    """Linear Zeeman coupling.

    rotational: E = -g_r mu_N M B for |J, M>; electronic: E = -+ g_e mu_B B / 2
    for the spin labels "down" / "up".
    """

    kind: str = ROTATIONAL
    g_r: float = 0.0
    g_e: float = const.G_E

    def __post_init__(self):
        if self.kind not in (ROTATIONAL, ELECTRONIC):
            raise ValueError(f"unknown Zeeman kind {self.kind!r}")

    def moment(self, state):
        """dE/dB (J/T) of one level."""
        if self.kind == ROTATIONAL:
            if not isinstance(state, RotBasisState):
                raise TypeError("rotational model needs a RotBasisState")
            return -self.g_r * const.MU_N * state.M
        if state not in ("down", "up"):
            raise ValueError("electronic levels are 'down' and 'up'")
        return (0.5 if state == "up" else -0.5) * self.g_e * const.MU_B


def zeeman_shift(state, B, model: ZeemanModel):
    """Energy shift (J) of ``state`` in field ``B`` (tesla)."""
    return model.moment(state) * np.asarray(B, dtype=float)


def manifold_moment_magnitude(J, g_r):
    """|g_r| sqrt(J(J+1)) in nuclear magnetons."""
    return abs(manifold_moment(J, g_r))


@dataclass(frozen=True)
class QubitPair:
    model: ZeemanModel
    lower: object
    upper: object
    name: str = ""

    @property
    def delta_mu(self):
        """Splitting sensitivity |d(E_upper - E_lower)/dB| in J/T."""
        return abs(self.model.moment(self.upper) - self.model.moment(self.lower))

    def gaussian_T2(self, sigma_B):
        """Quasi-static closed form: C(t) = exp(-(t / T2)^2), T2 = sqrt(2) hbar / (dmu sigma_B)."""
        if self.delta_mu == 0 or sigma_B == 0:
            return math.inf
        return math.sqrt(2.0) * const.HBAR / (self.delta_mu * sigma_B)

    def exponential_T2(self, process):
        """Motional-narrowing limit: C(t) = exp(-t / T2), 1/T2 = (dmu sigma_B / hbar)^2 tau_c."""
        if self.delta_mu == 0 or process.sigma_B == 0:
            return math.inf
        return (const.HBAR / (self.delta_mu * process.sigma_B)) ** 2 / process.tau_c

    def regime(self, process):
        """'gaussian' when the field is frozen over the decay, else 'exponential'."""
        return "gaussian" if process.tau_c >= self.gaussian_T2(process.sigma_B) else "exponential"

    def expected_T2(self, process):
        if self.regime(process) == "gaussian":
            return self.gaussian_T2(process.sigma_B)
        return self.exponential_T2(process)


def electronic_qubit(g_e=const.G_E):
    return QubitPair(ZeemanModel(ELECTRONIC, g_e=g_e), "down", "up", "electronic spin")


def rotational_qubit(g_r, lower=RotBasisState(2, -2), upper=RotBasisState(2, 2)):
    return QubitPair(ZeemanModel(ROTATIONAL, g_r=g_r), lower, upper, f"rotor {lower}/{upper}")


@dataclass
class RamseyResult:
    times: np.ndarray
    coherence: np.ndarray
    stderr: np.ndarray
    T2: float
    T2_err: float
    model: str
    message: str = ""

    @property
    def fit_ok(self):
        return math.isfinite(self.T2) and not self.message.startswith("fit failed")


def _g1(x):
    """x - 1 + exp(-x), stable for small x."""
    if x < 1e-3:
        return x**2 / 2 - x**3 / 6 + x**4 / 24 - x**5 / 120
    return x + math.expm1(-x)


def _g2(x):
    """2x - 3 + 4 exp(-x) - exp(-2x), stable for small x."""
    if x < 1e-2:
        return 2 * x**3 / 3 - x**4 / 2 + 7 * x**5 / 30 - x**6 / 12 + 31 * x**7 / 1260
    return 2 * x - 3 + 4 * math.exp(-x) - math.exp(-2 * x)


def _ou_integral_step(B, h, process, rng):
    """Exact joint update of (B, int B dt) over a step h of any length."""
    tau, sig = process.tau_c, process.sigma_B
    x = h / tau
    rho = math.exp(-x)
    one_minus_rho = -math.expm1(-x)
    var_b = sig**2 * -math.expm1(-2.0 * x)
    var_i = sig**2 * tau**2 * _g2(x)
    cov = sig**2 * tau * one_minus_rho**2
    l11 = math.sqrt(var_b)
    l21 = cov / l11 if l11 > 0 else 0.0
    l22 = math.sqrt(max(var_i - l21**2, 0.0))
    xi = rng.standard_normal((2, B.shape[0]))
    return (rho * B + l11 * xi[0],
            tau * one_minus_rho * B + l21 * xi[0] + l22 * xi[1])


def _accumulated_phase(delta_mu, process, times, n, rng):
    """phi(t) = (dmu / hbar) int_0^t B, sampled exactly at ``times`` for n trajectories."""
    B = process.sigma_B * rng.standard_normal(n)
    integral = np.zeros(n)
    out = np.zeros((n, len(times)))
    prev = 0.0
    for k, t in enumerate(times):
        h = t - prev
        if h > 0:
            B, dI = _ou_integral_step(B, h, process, rng)
            integral = integral + dI
        out[:, k] = integral
        prev = t
    return (delta_mu / const.HBAR) * out


def coherence_closed_form(delta_mu, process, t):
    """Exact OU Gaussian-phase coherence exp(-(dmu sigma/hbar)^2 tau^2 (t/tau - 1 + e^{-t/tau}))."""
    t = np.asarray(t, dtype=float)
    k = (delta_mu * process.sigma_B / const.HBAR) ** 2
    tau = process.tau_c
    return np.exp(-k * tau**2 * np.array([_g1(x) for x in np.ravel(t / tau)]).reshape(t.shape))


def ramsey_decay(qubit: QubitPair, process: NoiseProcess, times, trials=1000, seed=0,
                 threads=1, model="auto"):
    """Ensemble Ramsey coherence |<exp(i phi(t))>| and a fitted T2.

    ``model`` is "gaussian" (quasi-static), "exponential" (motional narrowing)
    or "auto" (gaussian when tau_c exceeds the window).  A failed fit leaves
    T2 = nan and records the reason in ``message``; the curve is still returned.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and sorted")
    if model == "auto":
        model = "gaussian" if process.tau_c >= times[-1] else "exponential"
    dmu = qubit.delta_mu
    if dmu == 0 or process.sigma_B == 0:
        ones = np.ones_like(times)
        return RamseyResult(times, ones, np.zeros_like(times), math.inf, 0.0, model,
                            "zero first-order sensitivity or zero noise: no dephasing")
    sizes = [min(CHUNK, trials - s) for s in range(0, trials, CHUNK)]

    def job(i):
        phi = _accumulated_phase(dmu, process, times, sizes[i], _rng(seed, i))
        z = np.exp(1j * phi)
        groups = np.array_split(z, -(-sizes[i] // GROUP))
        return (z.sum(axis=0), np.array([g.sum(axis=0) for g in groups]),
                (z.real ** 2).sum(axis=0), [len(g) for g in groups])

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    s = sum(p[0] for p in parts)
    s_re2 = sum(p[2] for p in parts)
    mean = s / trials
    coherence = np.abs(mean)
    # the ensemble phase is symmetric, so the standard error of the real part is used
    var = np.maximum(s_re2 / trials - mean.real ** 2, 0.0)
    stderr = np.sqrt(var / max(trials - 1, 1))
    guess = qubit.gaussian_T2(process.sigma_B) if model == "gaussian" else qubit.exponential_T2(process)
    T2, err, msg = _fit_T2(times, coherence, model, guess)
    group_sums = np.concatenate([p[1] for p in parts])
    group_sizes = np.concatenate([p[3] for p in parts])
    if math.isfinite(T2) and len(group_sizes) >= 10:
        err = _jackknife_T2(times, s, group_sums, group_sizes, trials, model, T2)
    return RamseyResult(times, coherence, stderr, T2, err, model, msg)


def _jackknife_T2(times, total, group_sums, group_sizes, trials, model, T2):
    """Delete-a-group jackknife error of the fitted T2.

    Every time point reuses the same trajectories, so fit residuals understate
    the Monte-Carlo error; resampling whole trajectory groups does not.
    """
    g = len(group_sizes)
    est = np.empty(g)
    for k in range(g):
        c = np.abs((total - group_sums[k]) / (trials - group_sizes[k]))
        est[k] = _fit_T2(times, c, model, T2)[0]
    if not np.all(np.isfinite(est)):
        return math.nan
    return float(math.sqrt((g - 1) / g * np.sum((est - est.mean()) ** 2)))


def _fit_T2(t, c, model, guess):
    mask = (t > 0) & (c > 0.05)
    if mask.sum() < 3:
        return math.nan, math.nan, "fit failed: fewer than 3 usable points"
    f = (lambda t, T: np.exp(-(t / T) ** 2)) if model == "gaussian" else (lambda t, T: np.exp(-t / T))
    p0 = guess if math.isfinite(guess) else t[mask][-1]
    try:
        popt, pcov = curve_fit(f, t[mask], c[mask], p0=[p0], maxfev=10000)
    except (RuntimeError, ValueError) as exc:
        return math.nan, math.nan, f"fit failed: {exc}"
    return abs(float(popt[0])), float(np.sqrt(pcov[0, 0])), ""


@dataclass
class CoherenceComparison:
    a: RamseyResult
    b: RamseyResult
    ratio: float  # T2_b / T2_a
    ratio_ci: tuple
    sensitivity_ratio: float  # dmu_a / dmu_b
    regime: str
    analytic_ratio: float

    def as_dict(self):
        return {
            "T2_a": self.a.T2, "T2_b": self.b.T2, "ratio": self.ratio,
            "ratio_ci": list(self.ratio_ci), "sensitivity_ratio": self.sensitivity_ratio,
            "regime": self.regime, "analytic_ratio": self.analytic_ratio,
        }


def compare_coherence(qubit_a: QubitPair, qubit_b: QubitPair, process: NoiseProcess, trials=2000,
                      seed=0, points=40, span=3.0, threads=1):
    """Ramsey T2 of two qubits under the same noise process.

    Each qubit is probed on its own window of ``span`` times its expected T2.
    The ratio is T2_b / T2_a with a 95 % interval from jackknife T2 errors.  The
    analytic prediction is the sensitivity ratio dmu_a / dmu_b in the
    quasi-static (Gaussian) regime and its square in the motional-narrowing
    (exponential) regime; "mixed" regimes get no prediction.
    """
    res = []
    for i, q in enumerate((qubit_a, qubit_b)):
        T = q.expected_T2(process)
        if not math.isfinite(T):
            T = qubit_a.expected_T2(process)
        times = np.linspace(0.0, span * T, points)
        model = q.regime(process) if q.delta_mu else "gaussian"
        res.append(ramsey_decay(q, process, times, trials, seed * 2 + i, threads, model=model))
    a, b = res
    ratio = b.T2 / a.T2
    rel = math.hypot(a.T2_err / a.T2, b.T2_err / b.T2) if math.isfinite(ratio) else math.nan
    z = stats.norm.ppf(0.975)
    ci = (ratio * (1 - z * rel), ratio * (1 + z * rel))
    sens = qubit_a.delta_mu / qubit_b.delta_mu if qubit_b.delta_mu else math.inf
    regime = a.model if a.model == b.model else "mixed"
    analytic = {"gaussian": sens, "exponential": sens**2}.get(regime, math.nan)
    return CoherenceComparison(a, b, ratio, ci, sens, regime, analytic)
