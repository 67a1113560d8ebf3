import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kurasync.equilibria import (
    Stability,
    canonicalize,
    count_vs_bound,
    find_equilibria,
    match_root,
    newton_solve,
    reduced_flow_jacobian,
    reduced_jacobian,
    stability_tag,
    torus_distance,
)
from kurasync.model import OscillatorSystem, normalize_frequencies, reduced_vector_field

from conftest import random_system, systems

TWO_PI = 2 * math.pi


def closed_form_pair(delta, lam):
    """Roots of Δω − λ sin ψ = 0 on [0, 2π), by the arcsin branch analysis."""
    ratio = delta / lam
    if abs(ratio) > 1:
        return []
    a = math.asin(ratio)
    roots = {round(x % TWO_PI, 15) for x in (a, math.pi - a)}
    return sorted(roots)


def central_difference(system, psi, h=1e-6):
    m = psi.size
    out = np.empty((m, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = h
        out[:, k] = (reduced_vector_field(system, psi + e) - reduced_vector_field(system, psi - e)) / (2 * h)
    return out


class TestTwoOscillators:
    def test_locked_roots(self):
        eq = find_equilibria(OscillatorSystem.uniform([0.5, -0.5], 2.0))
        assert eq.count == 2
        np.testing.assert_allclose([r[0] for r in eq.roots], [math.pi / 6, 5 * math.pi / 6], atol=1e-12)
        assert eq.stability == [Stability.STABLE, Stability.UNSTABLE]
        assert max(eq.residuals) <= 1e-10

    def test_no_roots_below_threshold(self):
        eq = find_equilibria(OscillatorSystem.uniform([0.5, -0.5], 0.5))
        assert eq.count == 0
        assert count_vs_bound(eq) == {"count": 0, "binomial_bound": 2, "within_bound": True}

    def test_jacobian_closed_form(self):
        s = OscillatorSystem.uniform([0.5, -0.5], 2.0)
        assert reduced_jacobian(s, [math.pi / 6])[0, 0] == pytest.approx(-math.sqrt(3), abs=1e-14)
        for psi in np.linspace(-4, 4, 17):
            assert reduced_jacobian(s, [psi])[0, 0] == pytest.approx(-2 * math.cos(psi), abs=1e-14)

    def test_oracle_random_pairs(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            d = rng.uniform(0.5, 2.0, 2)
            omega = rng.normal(0, 1, 2)
            lam = rng.uniform(0.1, 3.0)
            s = OscillatorSystem(d=d, omega=omega, coupling=[[0, lam], [lam, 0]])
            # normalization shifts ω_j by rate·d_j, which changes the difference when d_1 ≠ d_2
            delta = omega[0] - omega[1] - (omega.sum() / d.sum()) * (d[0] - d[1])
            expected = closed_form_pair(delta, lam)
            eq = find_equilibria(s)
            assert eq.count == len(expected)
            for root, ref in zip(eq.roots, expected):
                assert root[0] == pytest.approx(ref, abs=1e-10)
            assert all(r <= 1e-10 for r in eq.residuals)


class TestJacobian:
    def test_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            s = random_system(rng, n)
            psi = rng.uniform(-7, 7, n - 1)
            np.testing.assert_allclose(reduced_jacobian(s, psi), central_difference(s, psi), atol=1e-6)

    def test_flow_jacobian_unit_weights_match_reduced(self):
        # with d ≡ 1 the reduced flow is f itself up to the rotation frame
        rng = np.random.default_rng(3)
        s = OscillatorSystem.uniform(rng.normal(0, 1, 4), 1.7)
        psi = rng.uniform(0, TWO_PI, 3)
        np.testing.assert_allclose(reduced_flow_jacobian(s, psi), reduced_jacobian(s, psi), atol=1e-14)

    def test_newton_converges_quadratically(self):
        s = OscillatorSystem.uniform([0.4, -0.1, -0.3], 2.0)
        root = find_equilibria(s).roots[0]
        psi = root + 0.05
        errors = []
        for _ in range(4):
            f = reduced_vector_field(s, psi)
            errors.append(np.abs(f).max())
            psi = psi - np.linalg.solve(reduced_jacobian(s, psi), f)
        e = np.array(errors)
        assert e[-1] < 1e-13
        assert e[2] <= 10 * e[1] ** 2


class TestStability:
    def test_identical_frequencies_coherent_stable(self):
        s = OscillatorSystem.uniform([0.2, 0.2, 0.2], 1.5)
        eq = find_equilibria(s)
        k, dist = match_root(eq, [0.0, 0.0])
        assert dist < 1e-10
        assert eq.stability[k] is Stability.STABLE
        assert stability_tag(s, [0.0, 0.0]) is Stability.STABLE

    def test_weighted_flow_sign(self):
        # d scales eigenvalues but never flips their sign at n = 2
        s = OscillatorSystem(d=[0.3, 4.0], omega=[0.0, 0.0], coupling=[[0, 1.0], [1.0, 0]])
        assert stability_tag(s, [0.0]) is Stability.STABLE
        assert stability_tag(s, [math.pi]) is Stability.UNSTABLE

    def test_marginal_at_fold(self):
        # λ = Δω: the two roots merge at π/2 with zero derivative
        s = OscillatorSystem.uniform([0.5, -0.5], 1.0)
        assert stability_tag(s, [math.pi / 2]) is Stability.MARGINAL

    def test_zero_coupling_marginal(self):
        s = OscillatorSystem(d=[1, 1, 1], omega=[0, 0, 0], coupling=np.zeros((3, 3)))
        assert stability_tag(s, [0.3, 1.0]) is Stability.MARGINAL


class TestCanonicalization:
    def test_range(self):
        out = canonicalize([-1e-14, TWO_PI, 7.0, -3.0])
        assert np.all((out >= 0) & (out < TWO_PI))
        assert out[0] == 0.0 and out[1] == 0.0

    def test_torus_distance(self):
        assert torus_distance([0.0], [TWO_PI - 1e-3]) == pytest.approx(1e-3, abs=1e-12)
        assert torus_distance([1.0, 2.0], [1.0 + TWO_PI, 2.5]) == pytest.approx(0.5, abs=1e-12)

    def test_shifted_root_returns_same(self):
        rng = np.random.default_rng(5)
        s = normalize_frequencies(OscillatorSystem.uniform(rng.normal(0, 0.5, 4), 2.5))
        eq = find_equilibria(s)
        assert eq.count > 0
        for root in eq.roots:
            for k in range(root.size):
                shifted = root.copy()
                shifted[k] += TWO_PI * (1 if k % 2 == 0 else -1)
                pts, res = newton_solve(s, shifted[None, :])
                assert np.isfinite(res[0])
                assert torus_distance(canonicalize(pts[0]), root) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(systems(max_n=4), st.integers(8, 12))
    def test_set_invariants(self, system, grid):
        eq = find_equilibria(system, grid_per_dim=grid)
        assert all(r <= 1e-10 for r in eq.residuals)
        for root in eq.roots:
            assert np.all((root >= 0) & (root < TWO_PI))
        for i in range(eq.count):
            for j in range(i + 1, eq.count):
                assert torus_distance(eq.roots[i], eq.roots[j]) >= 1e-6
        assert [tuple(r) for r in eq.roots] == sorted(tuple(r) for r in eq.roots)
        assert len(eq.stability) == eq.count


class TestCounts:
    def test_n3_within_bound(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            eq = find_equilibria(random_system(rng, 3))
            assert eq.binomial_bound == 6
            assert eq.count <= 6
            assert not eq.notes

    @pytest.mark.slow
    def test_n4_uniform_within_bound(self):
        rng = np.random.default_rng(44)
        for _ in range(3):
            s = OscillatorSystem.uniform(rng.normal(0, 1, 4), rng.uniform(1.0, 4.0))
            eq = find_equilibria(s, grid_per_dim=64)
            assert eq.binomial_bound == 20
            assert eq.count <= 20

    def test_deterministic(self):
        s = random_system(np.random.default_rng(2), 4)
        a, b = find_equilibria(s), find_equilibria(s)
        assert a.count == b.count
        for x, y in zip(a.roots, b.roots):
            assert np.array_equal(x, y)


class TestErrors:
    def test_dimension_too_large(self):
        s = OscillatorSystem.uniform(np.zeros(8), 1.0)
        with pytest.raises(ValueError, match="exceeds"):
            find_equilibria(s)

    def test_grid_too_small(self):
        with pytest.raises(ValueError, match="grid_per_dim"):
            find_equilibria(OscillatorSystem.uniform([0.5, -0.5], 2.0), grid_per_dim=4)

    def test_reduced_jacobian_shape(self):
        with pytest.raises(ValueError):
            reduced_jacobian(OscillatorSystem.uniform([0, 0, 0], 1.0), [0.0])

    def test_to_list_shape(self):
        eq = find_equilibria(OscillatorSystem.uniform([0.5, -0.5], 2.0))
        items = eq.to_list()
        assert [set(x) for x in items] == [{"psi", "residual", "stability"}] * 2
        assert items[0]["stability"] == "stable"
