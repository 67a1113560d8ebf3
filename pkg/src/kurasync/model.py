"""Generalized first-order Kuramoto network.

    d_j dθ_j/dt = ω_j + (1/N) Σ_k λ_jk sin(θ_k − θ_j)

Phases are kept unwrapped in ℝ throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi
# below this |Z| the angle of the order parameter is meaningless
R_ZERO = 1e-12


class ValidationError(ValueError):
    """Raised when an oscillator system violates its invariants."""


def _frozen(values: ArrayLike, ndim: int) -> FloatArray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValidationError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class OscillatorSystem:
    """Parameters (d, ω, Λ) of an N-oscillator network.

    Construction does not validate; call :func:`validate` (every solver in
    the package does so on entry).
    """

    d: FloatArray
    omega: FloatArray
    coupling: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "d", _frozen(self.d, 1))
        object.__setattr__(self, "omega", _frozen(self.omega, 1))
        object.__setattr__(self, "coupling", _frozen(self.coupling, 2))

    @property
    def n(self) -> int:
        return int(self.omega.shape[0])

    @classmethod
    def uniform(cls, omega: ArrayLike, lam: float, d: ArrayLike | None = None) -> "OscillatorSystem":
        """All-to-all coupling λ_jk = lam for j ≠ k."""
        omega = np.asarray(omega, dtype=np.float64)
        n = omega.shape[0]
        coupling = lam * (np.ones((n, n)) - np.eye(n))
        d = np.ones(n) if d is None else d
        return cls(d=d, omega=omega, coupling=coupling)

    def is_uniform(self) -> bool:
        """True when every off-diagonal coupling equals the same nonzero value."""
        off = self.coupling[~np.eye(self.n, dtype=bool)]
        return bool(off.size) and off[0] != 0.0 and bool(np.all(off == off[0]))

    def uniform_strength(self) -> float | None:
        return float(self.coupling[0, 1]) if self.is_uniform() else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d.tolist(),
            "omega": self.omega.tolist(),
            "coupling": self.coupling.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "OscillatorSystem":
        unknown = set(data) - {"n", "d", "omega", "coupling"}
        if unknown:
            raise ValidationError(f"unknown system keys: {sorted(unknown)}")
        try:
            system = cls(d=data["d"], omega=data["omega"], coupling=data["coupling"])
        except KeyError as exc:
            raise ValidationError(f"missing system key {exc.args[0]!r}") from None
        if int(data.get("n", system.n)) != system.n:
            raise ValidationError(f"size mismatch: n={data['n']} but omega has {system.n} entries")
        validate(system)
        return system

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OscillatorSystem):
            return NotImplemented
        return (
            np.array_equal(self.d, other.d)
            and np.array_equal(self.omega, other.omega)
            and np.array_equal(self.coupling, other.coupling)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class OrderParameter:
    r: float
    phi: float
    z_re: float
    z_im: float
    indeterminate: bool = False


def validate(system: OscillatorSystem) -> None:
    """Raise :class:`ValidationError` naming the first violated invariant.

    Indices in messages are 1-based.
    """
    n = system.n
    if n < 2:
        raise ValidationError(f"need at least 2 oscillators, got {n}")
    if system.d.shape != (n,):
        raise ValidationError(f"size mismatch: d has {system.d.shape[0]} entries, omega has {n}")
    if system.coupling.shape != (n, n):
        raise ValidationError(f"size mismatch: coupling is {system.coupling.shape}, expected ({n}, {n})")
    for name, arr in (("d", system.d), ("omega", system.omega), ("coupling", system.coupling)):
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"non-finite entry in {name}")
    bad = np.flatnonzero(system.d <= 0)
    if bad.size:
        j = bad[0]
        raise ValidationError(f"nonpositive d at {j + 1}: {system.d[j]!r}")
    diag = np.flatnonzero(np.diag(system.coupling) != 0)
    if diag.size:
        raise ValidationError(f"nonzero diagonal at {diag[0] + 1}")
    lam = system.coupling
    scale = max(1.0, float(np.max(np.abs(lam))))
    asym = np.argwhere(np.triu(np.abs(lam - lam.T) > 1e-12 * scale))
    if asym.size:
        j, k = asym[0]
        raise ValidationError(f"asymmetric at ({j + 1},{k + 1})")


def normalize_frequencies(system: OscillatorSystem) -> OscillatorSystem:
    """Move to the co-rotating frame: ω_j ← ω_j − (Σω / Σd)·d_j."""
    validate(system)
    shift = system.omega.sum() / system.d.sum()
    return OscillatorSystem(d=system.d, omega=system.omega - shift * system.d, coupling=system.coupling)


def frame_rate(system: OscillatorSystem) -> float:
    """Angular velocity Σω/Σd of the co-rotating frame."""
    return float(system.omega.sum() / system.d.sum())


def coupling_sum(coupling: FloatArray, theta: FloatArray) -> FloatArray:
    """Σ_k λ_jk sin(θ_k − θ_j) for every j, via sin/cos expansion (O(N²) matvec)."""
    s = np.sin(theta)
    c = np.cos(theta)
    ls = coupling @ s
    lc = coupling @ c
    return c * ls - s * lc


def vector_field(system: OscillatorSystem, theta: ArrayLike) -> FloatArray:
    theta = np.asarray(theta, dtype=np.float64)
    return (system.omega + coupling_sum(system.coupling, theta) / system.n) / system.d


def order_parameter(theta: ArrayLike) -> OrderParameter:
    """Z = (1/N) Σ exp(iθ_j); phi is the principal argument in [0, 2π)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size == 0:
        raise ValueError("order parameter of an empty phase vector")
    z_re = float(np.mean(np.cos(theta)))
    z_im = float(np.mean(np.sin(theta)))
    r = float(np.hypot(z_re, z_im))
    if r < R_ZERO:
        return OrderParameter(r=r, phi=0.0, z_re=z_re, z_im=z_im, indeterminate=True)
    phi = float(np.mod(np.arctan2(z_im, z_re), TWO_PI))
    if phi >= TWO_PI:
        phi = 0.0
    return OrderParameter(r=min(r, 1.0), phi=phi, z_re=z_re, z_im=z_im)


def order_parameter_series(thetas: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Vectorized order parameter over sample rows: returns (Z, R, Φ)."""
    z = np.cos(thetas).mean(axis=1) + 1j * np.sin(thetas).mean(axis=1)
    r = np.minimum(np.abs(z), 1.0)
    phi = np.mod(np.angle(z), TWO_PI)
    phi[phi >= TWO_PI] = 0.0
    phi[r < R_ZERO] = 0.0
    return z, r, phi


def unwrap_phase_angle(phi_values: ArrayLike) -> FloatArray:
    """Continuous Φ(t) from principal-argument samples, starting in [0, 2π)."""
    return np.unwrap(np.asarray(phi_values, dtype=np.float64))


def velocity_bound(system: OscillatorSystem) -> FloatArray:
    """b_j = |ω_j/d_j| + (1/(N d_j)) Σ_k |λ_jk|; a uniform bound on |dθ_j/dt|."""
    return np.abs(system.omega / system.d) + np.abs(system.coupling).sum(axis=1) / (system.n * system.d)


def potential_energy(system: OscillatorSystem, theta: ArrayLike) -> float:
    """Σ_{j<k} λ_jk cos(θ_k − θ_j)."""
    theta = np.asarray(theta, dtype=np.float64)
    s = np.sin(theta)
    c = np.cos(theta)
    # Σ_{j,k} λ_jk cos(θ_k − θ_j) = cᵀΛc + sᵀΛs; diagonal is zero so halve it
    return 0.5 * float(c @ system.coupling @ c + s @ system.coupling @ s)


def kinetic_density(system: OscillatorSystem, theta_dot: ArrayLike) -> float:
    theta_dot = np.asarray(theta_dot, dtype=np.float64)
    return float(np.sum(system.d * theta_dot**2))


def reduced_vector_field(system: OscillatorSystem, psi: ArrayLike) -> FloatArray:
    """Phase-difference system f(ψ) with oscillator N as reference (ψ_N ≡ 0).

    f_j = ω_j − ω_N + (1/N) Σ_{l≤N} λ_jl sin(ψ_l − ψ_j) − (1/N) Σ_{l<N} λ_Nl sin ψ_l

    Roots are the equilibria modulo rotation when Σω = 0.
    """
    psi = np.asarray(psi, dtype=np.float64)
    n = system.n
    if psi.shape[-1] != n - 1:
        raise ValueError(f"psi must have {n - 1} entries, got {psi.shape[-1]}")
    full = np.zeros(n)
    full[:-1] = psi
    lam = system.coupling
    own = coupling_sum(lam, full)[:-1]
    ref = lam[-1, :-1] @ np.sin(psi)
    return system.omega[:-1] - system.omega[-1] + (own - ref) / n


def as_phases(system: OscillatorSystem, theta: Sequence[float] | ArrayLike) -> FloatArray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (system.n,):
        raise ValueError(f"theta must have {system.n} entries, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    return theta
