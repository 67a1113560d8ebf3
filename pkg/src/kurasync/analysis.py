"""Finite-horizon classifiers for the asymptotic synchronization notions.

Each classifier looks at a trailing window of the trajectory and at the
equal-length window before it, and returns a three-valued flag with the
witness value that decided it. All classifiers work in the co-rotating
frame (zero weighted-mean frequency), so frequency synchronization means
literally dθ/dt → 0.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .integrator import Trajectory
from .model import FloatArray, OscillatorSystem, TWO_PI, coupling_sum, frame_rate, normalize_frequencies

MIN_WINDOW_SAMPLES = 10


class Flag(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    INDETERMINATE = "indeterminate"

    @property
    def determinate(self) -> bool:
        return self is not Flag.INDETERMINATE


class OutsideTheoremScope(UserWarning):
    """Classifier applied where the equivalence it mirrors is not proven."""


@dataclass(frozen=True)
class ClassifierConfig:
    window_fraction: float = 0.25
    eps_freq: float = 1e-4
    eps_drift: float = 1e-3
    lock_bound: float = 100 * TWO_PI
    eps_op: float = 1e-3
    eps_margin: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("window_fraction", "eps_freq", "eps_drift", "lock_bound", "eps_op", "eps_margin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.window_fraction > 1:
            raise ValueError("window_fraction must be <= 1")

    @property
    def rest_floor(self) -> float:
        # speeds this small count as converged even without visible decay (roundoff floor)
        return 1e-6 * self.eps_freq


@dataclass
class SyncVerdict:
    fpls: Flag
    pls: Flag
    fss: Flag
    pairwise_fss: Flag
    opss: Flag
    phase_sync: Flag
    max_final_speed: float
    max_diff_spread: float
    max_diff_drift: float
    z_final: complex
    z_oscillation: float
    stationary_residual: float
    op_inequality_lhs_rhs: tuple[float, float]
    notes: list[str] = field(default_factory=list)

    FLAGS = ("fpls", "pls", "fss", "pairwise_fss", "opss", "phase_sync")

    def to_dict(self) -> dict:
        out: dict = {name: getattr(self, name).value for name in self.FLAGS}
        out["witnesses"] = {
            "max_final_speed": self.max_final_speed,
            "max_diff_spread": self.max_diff_spread,
            "max_diff_drift": self.max_diff_drift,
            "z_final": [self.z_final.real, self.z_final.imag],
            "z_oscillation": self.z_oscillation,
            "stationary_residual": self.stationary_residual,
            "op_inequality_lhs_rhs": list(self.op_inequality_lhs_rhs),
        }
        out["notes"] = list(self.notes)
        return out


@dataclass(frozen=True)
class _Frame:
    """Trajectory data in the co-rotating frame, split into windows."""

    system: OscillatorSystem
    times: FloatArray
    thetas: FloatArray
    theta_dots: FloatArray
    z: np.ndarray
    window: slice
    previous: slice


def _frame(traj: Trajectory, cfg: ClassifierConfig) -> _Frame:
    rate = frame_rate(traj.system)
    t = traj.times
    thetas = traj.thetas - rate * t[:, None]
    theta_dots = traj.theta_dots - rate
    z = np.cos(thetas).mean(axis=1) + 1j * np.sin(thetas).mean(axis=1)
    t_end = t[-1]
    width = cfg.window_fraction * t_end
    start = int(np.searchsorted(t, t_end - width, side="left"))
    prev_start = int(np.searchsorted(t, t_end - 2 * width, side="left"))
    if t.shape[0] - start < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window too short: {t.shape[0] - start} samples, need {MIN_WINDOW_SAMPLES}")
    return _Frame(
        system=normalize_frequencies(traj.system),
        times=t,
        thetas=thetas,
        theta_dots=theta_dots,
        z=z,
        window=slice(start, None),
        previous=slice(prev_start, start),
    )


def _decay_flag(current: float, previous: float | None, eps: float, floor: float) -> Flag:
    decayed = current <= floor or (previous is not None and current < 0.5 * previous)
    if current < eps and decayed:
        return Flag.TRUE
    if current > 10 * eps and not decayed:
        return Flag.FALSE
    return Flag.INDETERMINATE


def _window_max(values: FloatArray, sl: slice) -> float | None:
    chunk = values[sl]
    return float(chunk.max()) if chunk.size else None


def _spread(thetas: FloatArray) -> FloatArray:
    """max_{j,k} |θ_j − θ_k| per sample."""
    return thetas.max(axis=1) - thetas.min(axis=1)


def classify_frequency_sync(traj: Trajectory, cfg: ClassifierConfig = ClassifierConfig()) -> tuple[Flag, float]:
    fr = _frame(traj, cfg)
    speed = np.abs(fr.theta_dots).max(axis=1)
    cur = _window_max(speed, fr.window)
    prev = _window_max(speed, fr.previous)
    return _decay_flag(cur, prev, cfg.eps_freq, cfg.rest_floor), cur


def classify_pairwise_freq(traj: Trajectory, cfg: ClassifierConfig = ClassifierConfig()) -> tuple[Flag, float]:
    fr = _frame(traj, cfg)
    gap = _spread(fr.theta_dots)
    cur = _window_max(gap, fr.window)
    prev = _window_max(gap, fr.previous)
    return _decay_flag(cur, prev, 2 * cfg.eps_freq, 2 * cfg.rest_floor), cur


def _pls(fr: _Frame, cfg: ClassifierConfig) -> tuple[Flag, float, float]:
    spread = _spread(fr.thetas)
    sup_all = float(spread.max())
    cur = _window_max(spread, fr.window)
    prev = _window_max(spread, fr.previous)
    growth = abs(cur - prev) if prev is not None else np.inf
    # net change of every pairwise difference over the last half of the run
    half = int(np.searchsorted(fr.times, 0.5 * fr.times[-1]))
    moved = fr.thetas[-1] - fr.thetas[half]
    half_drift = float(moved.max() - moved.min())
    if sup_all > cfg.lock_bound or half_drift > TWO_PI:
        return Flag.FALSE, sup_all, half_drift
    if sup_all <= cfg.lock_bound and growth <= cfg.eps_drift:
        return Flag.TRUE, sup_all, half_drift
    return Flag.INDETERMINATE, sup_all, half_drift


def classify_phase_locked(traj: Trajectory, cfg: ClassifierConfig = ClassifierConfig()) -> tuple[Flag, float]:
    flag, sup_all, _ = _pls(_frame(traj, cfg), cfg)
    return flag, sup_all


def _pairwise_variation(thetas: FloatArray) -> float:
    """max over pairs (j,k) of the range of θ_j − θ_k across the rows."""
    worst = 0.0
    for j in range(thetas.shape[1] - 1):
        diffs = thetas[:, j + 1 :] - thetas[:, [j]]
        worst = max(worst, float((diffs.max(axis=0) - diffs.min(axis=0)).max()))
    return worst


def stationary_residual(system: OscillatorSystem, theta: FloatArray) -> float:
    """max_j |ω_j + (1/N) Σ_k λ_jk sin(θ_k − θ_j)| for the normalized system."""
    norm = normalize_frequencies(system)
    return float(np.max(np.abs(norm.omega + coupling_sum(norm.coupling, theta) / norm.n)))


def classify_full_phase_locked(traj: Trajectory, cfg: ClassifierConfig = ClassifierConfig()) -> tuple[Flag, float]:
    fr = _frame(traj, cfg)
    pls, _, _ = _pls(fr, cfg)
    drift = _pairwise_variation(fr.thetas[fr.window])
    residual = stationary_residual(fr.system, fr.thetas[-1])
    if pls is Flag.FALSE:
        return Flag.FALSE, drift
    if pls is Flag.TRUE and drift < cfg.eps_drift and residual < 10 * cfg.eps_freq:
        return Flag.TRUE, drift
    return Flag.INDETERMINATE, drift


def op_threshold(system: OscillatorSystem) -> float:
    """max over coupled pairs of |ω_j| / |λ_jk| (normalized frequencies)."""
    norm = normalize_frequencies(system)
    lam = np.abs(norm.coupling)
    coupled = lam > 0
    if not coupled.any():
        return np.inf
    ratios = np.abs(norm.omega)[:, None] / np.where(coupled, lam, 1.0)
    return float(ratios[coupled].max())


def theorem_scope_for_op(system: OscillatorSystem) -> bool:
    """Uniform coupling and a unique oscillator of largest |ω|."""
    if not system.is_uniform():
        return False
    mags = np.abs(normalize_frequencies(system).omega)
    return int(np.sum(mags == mags.max())) == 1


def classify_op_sync(
    traj: Trajectory,
    system: OscillatorSystem | None = None,
    cfg: ClassifierConfig = ClassifierConfig(),
) -> tuple[Flag, float]:
    """Order-parameter synchronization: Z(t) settles and |Z*| dominates |ω_j|/|λ_jk|.

    Warns with :class:`OutsideTheoremScope` for non-uniform coupling.
    """
    system = traj.system if system is None else system
    fr = _frame(traj, cfg)
    z_end = fr.z[-1]
    osc = float(np.abs(fr.z[fr.window] - z_end).max())
    lhs, rhs = abs(z_end), op_threshold(system)
    if not system.is_uniform():
        warnings.warn("non-uniform coupling: OP equivalence is outside theorem scope", OutsideTheoremScope, stacklevel=2)
    if osc < cfg.eps_op and lhs >= rhs - cfg.eps_margin:
        return Flag.TRUE, osc
    if osc > 10 * cfg.eps_op or lhs < rhs - cfg.eps_margin:
        return Flag.FALSE, osc
    return Flag.INDETERMINATE, osc


def classify_phase_sync(traj: Trajectory, cfg: ClassifierConfig = ClassifierConfig()) -> tuple[Flag, float]:
    fr = _frame(traj, cfg)
    spread = _spread(fr.thetas[fr.window])
    worst = float(spread.max())
    if worst < cfg.eps_drift:
        return Flag.TRUE, worst
    if float(spread.min()) > 10 * cfg.eps_drift:
        return Flag.FALSE, worst
    return Flag.INDETERMINATE, worst


def classify(traj: Trajectory, cfg: ClassifierConfig = ClassifierConfig()) -> SyncVerdict:
    """Run every classifier on one trajectory."""
    system = traj.system
    fr = _frame(traj, cfg)
    notes: list[str] = []
    fss, speed = classify_frequency_sync(traj, cfg)
    pfss, _ = classify_pairwise_freq(traj, cfg)
    pls, spread, _ = _pls(fr, cfg)
    fpls, drift = classify_full_phase_locked(traj, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutsideTheoremScope)
        opss, osc = classify_op_sync(traj, system, cfg)
    if not system.is_uniform():
        notes.append("outside-theorem-scope: coupling is not uniform")
    elif not theorem_scope_for_op(system):
        notes.append("outside-theorem-scope: largest |omega| is not unique")
    phase_sync, _ = classify_phase_sync(traj, cfg)
    if np.ptp(system.omega / system.d) > 0:
        notes.append("natural frequencies are not identical: phase synchronization is impossible")
    z_end = complex(fr.z[-1])
    return SyncVerdict(
        fpls=fpls,
        pls=pls,
        fss=fss,
        pairwise_fss=pfss,
        opss=opss,
        phase_sync=phase_sync,
        max_final_speed=speed,
        max_diff_spread=spread,
        max_diff_drift=drift,
        z_final=z_end,
        z_oscillation=osc,
        stationary_residual=stationary_residual(system, fr.thetas[-1]),
        op_inequality_lhs_rhs=(abs(z_end), op_threshold(system)),
        notes=notes,
    )


def equivalence_report(verdict: SyncVerdict, system: OscillatorSystem) -> list[tuple[str, str]]:
    """Pairs of classifiers whose determinate flags disagree.

    An empty list means the verdict is consistent with the equivalence of
    full phase-locking, phase-locking and frequency synchronization, and
    with order-parameter synchronization when its hypotheses hold.
    """
    names = ["fpls", "pls", "fss", "pairwise_fss"]
    if theorem_scope_for_op(system):
        names.append("opss")
    clashes = []
    for a, b in itertools.combinations(names, 2):
        fa, fb = getattr(verdict, a), getattr(verdict, b)
        if fa.determinate and fb.determinate and fa is not fb:
            clashes.append((a, b))
    return clashes


@dataclass(frozen=True, eq=False)
class EnergyRecord:
    times: FloatArray
    cumulative_kinetic: FloatArray
    potential_series: FloatArray
    linear_term_series: FloatArray
    n: int

    @property
    def coupling_term(self) -> FloatArray:
        return (self.potential_series - self.potential_series[0]) / self.n

    def identity_error(self) -> FloatArray:
        """Relative mismatch of ∫Σ d θ̇² = Σ ω (θ − θ₀) + (1/N)[P(t) − P(0)] at each sample."""
        rhs = self.linear_term_series + self.coupling_term
        scale = 1.0 + np.abs(self.cumulative_kinetic) + np.abs(self.linear_term_series) + np.abs(self.coupling_term)
        return np.abs(self.cumulative_kinetic - rhs) / scale

    def late_increase(self, fraction: float = 0.25) -> float:
        """Increase of the kinetic integral over the trailing fraction of the run."""
        start = int(np.searchsorted(self.times, self.times[-1] * (1 - fraction)))
        return float(self.cumulative_kinetic[-1] - self.cumulative_kinetic[start])


def _accelerations(system: OscillatorSystem, thetas: FloatArray, theta_dots: FloatArray) -> FloatArray:
    """d²θ/dt² along the flow: (1/(N d_j)) Σ_k λ_jk cos(θ_k − θ_j)(θ̇_k − θ̇_j), per sample row."""
    s, c = np.sin(thetas), np.cos(thetas)
    lam_t = system.coupling.T
    moving = c * ((c * theta_dots) @ lam_t) + s * ((s * theta_dots) @ lam_t)
    static = c * (c @ lam_t) + s * (s @ lam_t)
    return (moving - static * theta_dots) / (system.n * system.d)


def sampled_kinetic_integral(traj: Trajectory, system: OscillatorSystem) -> FloatArray:
    """Cumulative ∫ Σ d θ̇² dt from the stored samples alone.

    Trapezoid rule with the Euler-Maclaurin endpoint correction −h²/12·[g']
    per interval; g' = 2 Σ d θ̇ θ̈ is exact along the flow, so the error is
    fourth order in the sample spacing.
    """
    density = np.sum(system.d * traj.theta_dots**2, axis=1)
    slope = 2.0 * np.sum(system.d * traj.theta_dots * _accelerations(system, traj.thetas, traj.theta_dots), axis=1)
    h = np.diff(traj.times)
    steps = h * 0.5 * (density[1:] + density[:-1]) - h**2 / 12.0 * (slope[1:] - slope[:-1])
    return np.concatenate(([0.0], np.cumsum(steps)))


def energy_record(
    traj: Trajectory,
    system: OscillatorSystem | None = None,
    quadrature: Literal["auto", "samples"] = "auto",
) -> EnergyRecord:
    """Kinetic integral, potential and linear terms of the energy identity along a trajectory.

    With ``quadrature="auto"`` the step-resolution kinetic integral recorded
    by the integrator is used when present; otherwise, or with
    ``"samples"``, it is rebuilt from the stored samples.
    """
    if quadrature not in ("auto", "samples"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    own = system is None or system is traj.system
    system = traj.system if system is None else system
    if quadrature == "auto" and own and traj.kinetic_integral is not None:
        cumulative = np.asarray(traj.kinetic_integral)
    else:
        cumulative = sampled_kinetic_integral(traj, system)
    s, c = np.sin(traj.thetas), np.cos(traj.thetas)
    potential = 0.5 * (np.einsum("ij,jk,ik->i", c, system.coupling, c) + np.einsum("ij,jk,ik->i", s, system.coupling, s))
    linear = (traj.thetas - traj.thetas[0]) @ system.omega
    return EnergyRecord(traj.times, cumulative, potential, linear, system.n)
