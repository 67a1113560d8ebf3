"""Equilibria of the phase-difference system by multistart Newton on the torus."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .model import FloatArray, OscillatorSystem, TWO_PI, normalize_frequencies, validate

MAX_REDUCED_DIM = 6
DEDUPE_RADIUS = 1e-6
REPORT_RESIDUAL = 1e-10
MARGINAL_BAND = 1e-8


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True, eq=False)
class EquilibriumSet:
    roots: list[FloatArray]
    residuals: list[float]
    stability: list[Stability]
    n: int
    seeds: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.roots)

    @property
    def binomial_bound(self) -> int:
        return math.comb(2 * self.n - 2, self.n - 1)

    def to_list(self) -> list[dict]:
        return [
            {"psi": root.tolist(), "residual": res, "stability": tag.value}
            for root, res, tag in zip(self.roots, self.residuals, self.stability)
        ]


def _batch_f(system: OscillatorSystem, psi: FloatArray) -> FloatArray:
    """f evaluated on rows of an (m, n−1) array."""
    n = system.n
    m = psi.shape[0]
    full = np.zeros((m, n))
    full[:, :-1] = psi
    s, c = np.sin(full), np.cos(full)
    lam = system.coupling
    own = c * (s @ lam.T) - s * (c @ lam.T)
    ref = s[:, :-1] @ lam[-1, :-1]
    return system.omega[:-1] - system.omega[-1] + (own[:, :-1] - ref[:, None]) / n


def _batch_jacobian(system: OscillatorSystem, psi: FloatArray) -> FloatArray:
    n = system.n
    m = psi.shape[0]
    full = np.zeros((m, n))
    full[:, :-1] = psi
    lam = system.coupling
    # cos(ψ_k − ψ_j) for every row, j, k
    cosdiff = np.cos(full[:, None, :] - full[:, :, None])
    weighted = lam[None, :, :] * cosdiff
    jac = weighted[:, :-1, :-1].copy()
    idx = np.arange(n - 1)
    jac[:, idx, idx] = -weighted[:, :-1, :].sum(axis=2)
    # derivative of the reference row term −(1/N) Σ_l λ_Nl sin ψ_l
    jac -= (lam[-1, :-1] * np.cos(psi))[:, None, :]
    return jac / n


def reduced_jacobian(system: OscillatorSystem, psi: ArrayLike) -> FloatArray:
    """Analytic ∂f_j/∂ψ_k of the reduced system."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != (system.n - 1,):
        raise ValueError(f"psi must have {system.n - 1} entries")
    return _batch_jacobian(system, psi[None, :])[0]


def flow_jacobian(system: OscillatorSystem, theta: ArrayLike) -> FloatArray:
    """Jacobian of the full vector field dθ/dt at θ; annihilates the rotation mode (1,…,1)."""
    theta = np.asarray(theta, dtype=np.float64)
    n = system.n
    weighted = system.coupling * np.cos(theta[None, :] - theta[:, None]) / n
    jac = weighted - np.diag(weighted.sum(axis=1))
    return jac / system.d[:, None]


def reduced_flow_jacobian(system: OscillatorSystem, psi: ArrayLike) -> FloatArray:
    """Linearization of dψ/dt with ψ_j = θ_j − θ_N, obtained by projecting out rotation.

    With θ = (ψ, 0), dψ_j/dt = θ̇_j − θ̇_N, so the reduced Jacobian is
    P J E where E embeds ψ and P takes differences against the last row.
    """
    psi = np.asarray(psi, dtype=np.float64)
    theta = np.append(psi, 0.0)
    jac = flow_jacobian(system, theta)
    return jac[:-1, :-1] - jac[-1, :-1][None, :]


def stability_tag(system: OscillatorSystem, root: ArrayLike) -> Stability:
    eig = np.linalg.eigvals(reduced_flow_jacobian(system, root))
    if np.all(eig.real < -MARGINAL_BAND):
        return Stability.STABLE
    if np.any(eig.real > MARGINAL_BAND):
        return Stability.UNSTABLE
    return Stability.MARGINAL


def canonicalize(psi: ArrayLike) -> FloatArray:
    """Map into the fundamental cell [0, 2π)^(n−1), snapping values next to 2π to 0."""
    out = np.mod(np.asarray(psi, dtype=np.float64), TWO_PI)
    out[out > TWO_PI - 1e-12] = 0.0
    return out


def torus_distance(a: ArrayLike, b: ArrayLike) -> float:
    """Max-norm distance on the torus."""
    diff = np.abs(np.mod(np.asarray(a) - np.asarray(b), TWO_PI))
    return float(np.max(np.minimum(diff, TWO_PI - diff)))


def newton_solve(
    system: OscillatorSystem,
    seeds: FloatArray,
    tol: float = 1e-12,
    max_iter: int = 60,
) -> tuple[FloatArray, FloatArray]:
    """Vectorized Newton from each seed row. Returns (points, residuals); residual is inf where it failed."""
    psi = np.array(seeds, dtype=np.float64, copy=True)
    active = np.ones(psi.shape[0], dtype=bool)
    residual = np.full(psi.shape[0], np.inf)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f = _batch_f(system, psi[idx])
        res = np.abs(f).max(axis=1)
        residual[idx] = res
        done = res <= tol
        active[idx[done]] = False
        idx, f = idx[~done], f[~done]
        if idx.size == 0:
            break
        jac = _batch_jacobian(system, psi[idx])
        ok = np.abs(np.linalg.det(jac)) > 1e-14
        active[idx[~ok]] = False
        residual[idx[~ok]] = np.inf
        idx, f, jac = idx[ok], f[ok], jac[ok]
        if idx.size == 0:
            break
        step = np.linalg.solve(jac, f[..., None])[..., 0]
        # cap steps at half a period to keep Newton local
        big = np.abs(step).max(axis=1)
        scale = np.where(big > np.pi / 2, (np.pi / 2) / np.maximum(big, 1e-300), 1.0)
        psi[idx] -= step * scale[:, None]
    if active.any():
        idx = np.flatnonzero(active)
        residual[idx] = np.abs(_batch_f(system, psi[idx])).max(axis=1)
    residual[residual > tol] = np.inf
    return psi, residual


def _dedupe(points: FloatArray, residuals: FloatArray) -> tuple[list[FloatArray], list[float]]:
    if points.shape[0] == 0:
        return [], []
    # collapse exact-ish duplicates cheaply, then merge the survivors on the torus
    keys = np.round(points / (0.1 * DEDUPE_RADIUS)).astype(np.int64)
    keys[keys == round(TWO_PI / (0.1 * DEDUPE_RADIUS))] = 0
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    by_group = np.lexsort((residuals, inverse))
    heads = by_group[np.r_[True, np.diff(inverse[by_group]) != 0]]
    points, residuals = points[heads], residuals[heads]
    order = np.lexsort(points.T[::-1])
    roots: list[FloatArray] = []
    res: list[float] = []
    for i in order:
        p = points[i]
        match = next((k for k, q in enumerate(roots) if torus_distance(p, q) < DEDUPE_RADIUS), None)
        if match is None:
            roots.append(p)
            res.append(float(residuals[i]))
        elif residuals[i] < res[match]:
            res[match] = float(residuals[i])
    return roots, res


def find_equilibria(system: OscillatorSystem, grid_per_dim: int = 16, tol: float = 1e-12) -> EquilibriumSet:
    """All roots of f(ψ) = 0 reachable by Newton from a uniform grid of seeds.

    The system is normalized first, so roots are genuine equilibria of the
    flow modulo rotation. Seeds whose Newton iteration fails are dropped.
    """
    validate(system)
    dim = system.n - 1
    if dim > MAX_REDUCED_DIM:
        raise ValueError(f"reduced dimension {dim} exceeds {MAX_REDUCED_DIM}")
    if grid_per_dim < 8:
        raise ValueError("grid_per_dim must be at least 8")
    norm = normalize_frequencies(system)
    axis = (np.arange(grid_per_dim) + 0.5) * TWO_PI / grid_per_dim
    seeds = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    points, residuals = [], []
    for chunk in np.array_split(seeds, max(1, seeds.shape[0] // 20000)):
        pts, res = newton_solve(norm, chunk, tol=tol)
        keep = np.isfinite(res)
        points.append(canonicalize(pts[keep]))
        residuals.append(res[keep])
    pts = np.concatenate(points) if points else np.empty((0, dim))
    res = np.concatenate(residuals) if residuals else np.empty(0)
    roots, res_list = _dedupe(pts.reshape(-1, dim), res)
    # re-canonicalize the survivors and tag them
    roots = [canonicalize(r) for r in roots]
    tags = [stability_tag(norm, r) for r in roots]
    notes = []
    bound = math.comb(2 * system.n - 2, system.n - 1)
    if len(roots) > bound:
        notes.append(f"count {len(roots)} exceeds binomial bound {bound}: degenerate system or solver fault")
    return EquilibriumSet(roots, res_list, tags, system.n, seeds=seeds.shape[0], notes=notes)


def count_vs_bound(eq: EquilibriumSet) -> dict:
    return {
        "count": eq.count,
        "binomial_bound": eq.binomial_bound,
        "within_bound": eq.count <= eq.binomial_bound,
    }


def match_root(eq: EquilibriumSet, psi: ArrayLike) -> tuple[int | None, float]:
    """Index of the nearest root on the torus and its distance."""
    if not eq.roots:
        return None, np.inf
    p = canonicalize(psi)
    dists = [torus_distance(p, r) for r in eq.roots]
    k = int(np.argmin(dists))
    return k, dists[k]
