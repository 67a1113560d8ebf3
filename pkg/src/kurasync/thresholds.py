"""Closed-form necessary conditions for synchronization under uniform coupling."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import ArrayLike


@dataclass(frozen=True)
class ThresholdReport:
    n: int
    omega_max_abs: float
    omega_M: float
    omega_m: float
    theta_opt: float
    term_ours: float
    term_chopra: float
    lambda_c: float
    notes: list[str] = field(default_factory=list)

    def verdict_for(self, lam: float) -> str:
        if lam < self.lambda_c:
            return "synchronization impossible"
        return "not excluded"

    def to_dict(self) -> dict:
        return asdict(self)


def theta_opt(n: int) -> float:
    """Angle maximizing 2 sin θ + 2(n−2) sin(θ/2); lies in (0, π)."""
    if n < 2:
        raise ValueError(f"theta_opt needs n >= 2, got {n}")
    m = n - 2
    # (−m + √(m²+32))/8 rewritten as 4/(m + √(m²+32)) to avoid cancellation at large n
    arg = 4.0 / (m + math.sqrt(m * m + 32.0))
    return 2.0 * math.acos(arg)


def coherence_term(omega_max_abs: float, n: int) -> float:
    """ω (n²+1) / (n² − n + √(2n))."""
    return omega_max_abs * (n * n + 1) / (n * n - n + math.sqrt(2.0 * n))


def spread_term(omega_range: float, n: int) -> float:
    """(ω_M − ω_m) n / (2 sin θ_opt + 2(n−2) sin(θ_opt/2))."""
    th = theta_opt(n)
    return omega_range * n / (2.0 * math.sin(th) + 2.0 * (n - 2) * math.sin(th / 2.0))


def critical_coupling(omega: ArrayLike, n: int | None = None) -> ThresholdReport:
    """Critical uniform coupling below which no synchronization state exists.

    Inertial weights d_j do not enter either term; the formula is applied
    as is for any d.
    """
    omega = np.asarray(omega, dtype=np.float64)
    n = omega.shape[0] if n is None else n
    if omega.shape != (n,):
        raise ValueError(f"omega must have {n} entries, got shape {omega.shape}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    omega_max_abs = float(np.max(np.abs(omega)))
    omega_M, omega_m = float(np.max(omega)), float(np.min(omega))
    notes = ["inertial weights d_j do not enter the threshold"]
    if omega_max_abs == 0.0:
        notes.append("identical zero frequencies: threshold degenerates to 0")
    term_ours = coherence_term(omega_max_abs, n)
    term_chopra = spread_term(omega_M - omega_m, n)
    return ThresholdReport(
        n=n,
        omega_max_abs=omega_max_abs,
        omega_M=omega_M,
        omega_m=omega_m,
        theta_opt=theta_opt(n),
        term_ours=term_ours,
        term_chopra=term_chopra,
        lambda_c=max(term_ours, term_chopra),
        notes=notes,
    )


def r_upper_bound(omega_max_abs: float, lam: float, n: int) -> float:
    """Upper bound 1 − 1/n + (1/n)√(1 − (ω/λ)²) on the limiting coherence of a synchronized run."""
    if not lam > omega_max_abs > 0:
        raise ValueError(f"need lambda > omega_max_abs > 0, got lambda={lam}, omega={omega_max_abs}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    ratio = omega_max_abs / lam
    return 1.0 - 1.0 / n + math.sqrt(1.0 - ratio * ratio) / n


def two_oscillator_threshold(omega1: float, omega2: float) -> float:
    return abs(omega2 - omega1)
