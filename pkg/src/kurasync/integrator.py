"""Time stepping for the Kuramoto flow: classical RK4 and Dormand-Prince 5(4)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .model import (
    FloatArray,
    OscillatorSystem,
    as_phases,
    coupling_sum,
    order_parameter_series,
    validate,
)

MIN_STEP = 1e-12


class IntegrationError(RuntimeError):
    """Numerical abort: step-size underflow or a non-finite state."""


@dataclass(frozen=True)
class IntegratorConfig:
    method: Literal["rk4", "rk45"] = "rk4"
    dt: float = 0.01
    t_end: float = 200.0
    sample_every: int = 10
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        if self.method == "rk45" and not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rk45 needs positive rel_tol and abs_tol")


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: FloatArray
    thetas: FloatArray
    theta_dots: FloatArray
    r_values: FloatArray
    phi_values: FloatArray
    system: OscillatorSystem
    stats: dict = field(default_factory=dict)
    # ∫ Σ d θ̇² dt accumulated at step resolution; None when rebuilt from samples
    kinetic_integral: FloatArray | None = None

    @property
    def n_samples(self) -> int:
        return int(self.times.shape[0])

    @property
    def z_values(self) -> np.ndarray:
        return self.r_values * np.exp(1j * self.phi_values)

    @classmethod
    def from_samples(
        cls,
        system: OscillatorSystem,
        times: FloatArray,
        thetas: FloatArray,
        kinetic_integral: FloatArray | None = None,
        **stats,
    ) -> "Trajectory":
        """Build a trajectory, recomputing derivatives and order parameter at every sample."""
        thetas = np.asarray(thetas, dtype=np.float64)
        theta_dots = _rhs_rows(system, thetas)
        _, r, phi = order_parameter_series(thetas)
        return cls(
            np.asarray(times, dtype=np.float64), thetas, theta_dots, r, phi, system, dict(stats), kinetic_integral
        )


def _rhs_rows(system: OscillatorSystem, thetas: FloatArray) -> FloatArray:
    s = np.sin(thetas)
    c = np.cos(thetas)
    ls = s @ system.coupling.T
    lc = c @ system.coupling.T
    return (system.omega + (c * ls - s * lc) / system.n) / system.d


def _make_rhs(system: OscillatorSystem) -> Callable[[FloatArray], FloatArray]:
    omega, d, lam, n = system.omega, system.d, system.coupling, system.n

    def rhs(theta: FloatArray) -> FloatArray:
        return (omega + coupling_sum(lam, theta) / n) / d

    return rhs


def _rk4_step(rhs: Callable[[FloatArray], FloatArray], y: FloatArray, h: float, d: FloatArray) -> tuple[FloatArray, float]:
    """One step; also returns the RK4 increment of K with dK/dt = Σ d θ̇²."""
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    dk = (h / 6.0) * (d @ (k1 * k1) + 2.0 * (d @ (k2 * k2)) + 2.0 * (d @ (k3 * k3)) + d @ (k4 * k4))
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), dk


def _integrate_rk4(rhs, y0: FloatArray, cfg: IntegratorConfig, d: FloatArray):
    n_steps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    every = int(cfg.sample_every)
    n_keep = n_steps // every + 1 + (n_steps % every != 0)
    times = np.empty(n_keep)
    states = np.empty((n_keep, y0.shape[0]))
    kinetic = np.empty(n_keep)
    times[0], states[0], kinetic[0] = 0.0, y0, 0.0
    y, acc = y0, 0.0
    s = 1
    for i in range(1, n_steps + 1):
        t = i * cfg.dt
        h = cfg.dt if i < n_steps else cfg.t_end - (n_steps - 1) * cfg.dt
        y, dk = _rk4_step(rhs, y, h, d)
        acc += dk
        if i % every == 0 or i == n_steps:
            if not np.all(np.isfinite(y)):
                raise IntegrationError(f"non-finite state at t={t:.6g}")
            times[s] = cfg.t_end if i == n_steps else t
            states[s] = y
            kinetic[s] = acc
            s += 1
    return times[:s], states[:s], kinetic[:s], {"steps": n_steps, "rejected": 0}


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


def _integrate_rk45(rhs, y0: FloatArray, cfg: IntegratorConfig, d: FloatArray):
    every = int(cfg.sample_every)
    times, states, kinetic = [0.0], [y0.copy()], [0.0]
    acc = 0.0
    t, y, h = 0.0, y0, min(cfg.dt, cfg.t_end)
    k = np.empty((7, y0.shape[0]))
    k[0] = rhs(y)
    accepted = rejected = 0
    while t < cfg.t_end:
        last = t + h >= cfg.t_end * (1 - 1e-14)
        if last:
            h = cfg.t_end - t
        for i in range(1, 7):
            k[i] = rhs(y + h * (np.asarray(_DP_A[i]) @ k[:i]))
        y_new = y + h * (_DP_B5 @ k)
        err_vec = h * (_DP_E @ k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        if not np.isfinite(err):
            raise IntegrationError(f"non-finite state at t={t:.6g}")
        if err <= 1.0:
            t = cfg.t_end if last else t + h
            y = y_new
            acc += h * float(_DP_B5 @ ((k * k) @ d))
            k[0] = k[6]  # first-same-as-last
            accepted += 1
            if accepted % every == 0 or last:
                times.append(t)
                states.append(y.copy())
                kinetic.append(acc)
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            factor = max(0.2, 0.9 * err ** -0.2)
        h *= factor
        if h < MIN_STEP and t < cfg.t_end:
            raise IntegrationError(f"step size underflow (h={h:.3g}) at t={t:.6g}")
    if times[-1] != cfg.t_end:
        times.append(cfg.t_end)
        states.append(y.copy())
        kinetic.append(acc)
    return np.array(times), np.array(states), np.array(kinetic), {"steps": accepted, "rejected": rejected}


def integrate(system: OscillatorSystem, theta0: Sequence[float], config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the flow from ``theta0`` over [0, config.t_end].

    Samples are kept every ``sample_every`` accepted steps plus the final
    time. Derivative rows are recomputed from the vector field at each kept
    sample rather than interpolated. The kinetic integral ∫ Σ d θ̇² dt is
    carried along as an extra quadrature with the same stage weights.
    """
    cfg = config or IntegratorConfig()
    validate(system)
    y0 = as_phases(system, theta0).copy()
    rhs = _make_rhs(system)
    run = _integrate_rk4 if cfg.method == "rk4" else _integrate_rk45
    times, states, kinetic, stats = run(rhs, y0, cfg, system.d)
    return Trajectory.from_samples(system, times, states, kinetic_integral=kinetic, method=cfg.method, **stats)


def endpoint(system: OscillatorSystem, theta0: Sequence[float], config: IntegratorConfig) -> FloatArray:
    return integrate(system, theta0, config).thetas[-1]


def convergence_order(
    system: OscillatorSystem,
    theta0: Sequence[float],
    dt_list: Sequence[float],
    t_end: float = 10.0,
    method: Literal["rk4"] = "rk4",
) -> float:
    """Empirical order of the fixed-step scheme from endpoint errors.

    Errors are measured against a run at ``min(dt_list) / 64`` and the order
    is the least-squares slope of log(error) against log(dt).
    """
    dts = np.sort(np.asarray(dt_list, dtype=np.float64))[::-1]
    if dts.size < 2:
        raise ValueError("need at least two step sizes")
    ref_cfg = IntegratorConfig(method=method, dt=float(dts[-1]) / 64, t_end=t_end, sample_every=10**9)
    reference = endpoint(system, theta0, ref_cfg)
    errors = []
    for dt in dts:
        cfg = IntegratorConfig(method=method, dt=float(dt), t_end=t_end, sample_every=10**9)
        errors.append(np.max(np.abs(endpoint(system, theta0, cfg) - reference)))
    errors = np.asarray(errors)
    if np.any(errors <= 0):
        raise ValueError("zero error at some step size; system is integrated exactly")
    slope, _ = np.polyfit(np.log(dts), np.log(errors), 1)
    return float(slope)
