from math import exp, log

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upconcave.domains import ThetaSpec, make_box, make_uniform_matroid, maximal_convex_subset
from upconcave.linearization import (LinearizationContext, QuadratureError, alpha_at,
                                     alpha_star, ell, estimate_surrogate,
                                     estimate_surrogate_batch, invert_z_cdf, make_context,
                                     sample_z, surrogate_exact, weight_integral, z_cdf)
from upconcave.objectives import make_linear, make_norm_power, random_quadratic
from upconcave.oracles import QueryOracle

UNIFORM = make_uniform_matroid(8, 3)
CONST = LinearizationContext(1.0, ThetaSpec.constant(), 1.0)


def trapezoid_surrogate(ctx, f, x, n=100_000):
    r = np.linspace(0.0, 1.0, n + 1)
    w = np.exp(ell(ctx, r, x))
    vals = w[:, None] * f.grad(r[:, None] * x[None, :])
    h = 1.0 / n
    return h * (vals.sum(axis=0) - 0.5 * (vals[0] + vals[-1]))


class TestEll:
    def test_constant_theta(self):
        x = np.full(4, 0.3)
        r = np.linspace(0, 1, 11)
        np.testing.assert_allclose(ell(CONST, r, x), -(1 - r), atol=1e-15)
        assert ell(CONST, 0.0, x) == -1.0

    def test_endpoint_zero(self):
        for ctx in (CONST, make_context(UNIFORM, ThetaSpec.norm_power(1, 2), 0.5)):
            assert ell(ctx, 1.0, np.full(8, 0.2)) == 0.0

    def test_origin(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        np.testing.assert_array_equal(ell(ctx, np.linspace(0, 1, 5), np.zeros(8)), 0.0)

    def test_custom_matches_closed_form(self):
        custom = make_context(UNIFORM, ThetaSpec.custom(lambda x: np.sum(x, axis=-1)))
        closed = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        x = np.random.default_rng(0).random(8) * 0.4
        r = np.linspace(0, 1, 9)
        np.testing.assert_allclose(ell(custom, r, x), ell(closed, r, x), atol=1e-12)


class TestWeight:
    def test_constant_theta(self):
        assert weight_integral(CONST, np.full(3, 0.5)) == pytest.approx(1 - exp(-1), abs=1e-12)

    def test_limits(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1), gamma=1e-12)
        assert weight_integral(ctx, np.full(8, 0.3)) == pytest.approx(1.0, abs=1e-11)
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 2))
        assert weight_integral(ctx, np.zeros(8)) == 1.0

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 3.0), st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.floats(0.05, 1.0))
    def test_against_scipy(self, norm, sigma, gamma):
        from scipy.integrate import quad
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, sigma), gamma)
        x = np.full(8, norm / 8)
        ref, _ = quad(lambda r: exp(ell(ctx, r, x)), 0, 1, epsabs=1e-14, epsrel=1e-13)
        assert weight_integral(ctx, x) == pytest.approx(ref, abs=1e-11)
        assert 0 < weight_integral(ctx, x) <= 1


class TestSurrogate:
    def test_linear(self):
        a = np.arange(1, 6.0)
        f = make_linear(a)
        x = np.full(5, 0.4)
        ctx = make_context(make_box(5), ThetaSpec.norm_power(1, 1))
        np.testing.assert_allclose(surrogate_exact(ctx, f, x), weight_integral(ctx, x) * a,
                                   atol=1e-8)

    def test_quadratic_vs_trapezoid(self):
        f = random_quadratic(6, seed=3)
        rng = np.random.default_rng(4)
        for x in rng.random((5, 6)):
            ref = trapezoid_surrogate(CONST, f, x)
            np.testing.assert_allclose(surrogate_exact(CONST, f, x), ref, atol=1e-8)

    def test_norm_power_vs_trapezoid(self):
        f = make_norm_power(8, 3)
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 2))
        x = np.random.default_rng(5).random(8) * 0.4
        np.testing.assert_allclose(surrogate_exact(ctx, f, x), trapezoid_surrogate(ctx, f, x),
                                   rtol=1e-8)

    def test_origin(self):
        f = random_quadratic(4, seed=6)
        ctx = make_context(make_uniform_matroid(4, 2), ThetaSpec.norm_power(1, 1))
        np.testing.assert_allclose(surrogate_exact(ctx, f, np.zeros(4)), f.grad(np.zeros(4)),
                                   rtol=1e-14)

    def test_quadrature_converged(self):
        f = random_quadratic(8, seed=7)
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        x = np.full(8, 3 / 8)
        a = surrogate_exact(ctx, f, x, tol=1e-12)
        b = surrogate_exact(ctx, f, x)
        assert np.max(np.abs(a - b)) < 1e-8

    def test_raises_when_unconverged(self):
        f = random_quadratic(4, seed=8)
        ctx = make_context(make_uniform_matroid(4, 2), ThetaSpec.norm_power(1, 1))
        with pytest.raises(QuadratureError):
            surrogate_exact(ctx, f, np.full(4, 0.5), tol=1e-30, max_nodes=129)


class TestAlpha:
    def test_constant_theta_everywhere(self):
        for x in np.random.default_rng(9).random((10, 4)):
            assert alpha_at(CONST, x) == pytest.approx(1 - exp(-1), abs=1e-15)

    def test_origin(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        assert alpha_at(ctx, np.zeros(8)) == 0.0

    def test_full_norm_point(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        x = np.array([1, 1, 1, 0, 0, 0, 0, 0.0])
        assert alpha_at(ctx, x) == pytest.approx(1 - exp(-0.5), abs=1e-15)

    @pytest.mark.parametrize("sigma", [0.0, 0.5, 1.0, 2.0, 3.0])
    @pytest.mark.parametrize("gamma", [0.3, 1.0])
    def test_basis_closed_form(self, sigma, gamma):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, sigma), gamma)
        got = alpha_star(ctx, maximal_convex_subset(UNIFORM))
        assert got == pytest.approx(1 - exp(-gamma / (sigma + 1)), abs=1e-14)

    def test_reference_values(self):
        Ks = maximal_convex_subset(UNIFORM)
        assert abs(alpha_star(make_context(UNIFORM, ThetaSpec.constant()), Ks) - (1 - 1 / np.e)) <= 1e-12
        assert abs(alpha_star(make_context(UNIFORM, ThetaSpec.norm_power(1, 2)), Ks)
                   - 0.28346868942621073) <= 1e-12

    def test_custom_theta_alpha_star(self):
        Ks = maximal_convex_subset(UNIFORM)
        custom = make_context(UNIFORM, ThetaSpec.custom(lambda x: np.sum(x, axis=-1)))
        closed = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        assert alpha_star(custom, Ks) == pytest.approx(alpha_star(closed, Ks), abs=1e-10)


class TestSampler:
    def test_median_sigma0(self):
        med = float(invert_z_cdf(CONST, np.full(3, 0.5), np.array([0.5]))[0])
        assert abs(med - (1 + log((1 + exp(-1)) / 2))) <= 1e-9

    def test_endpoints(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 2))
        x = np.full(8, 0.3)
        np.testing.assert_array_equal(invert_z_cdf(ctx, x, np.array([0.0, 1.0])), [0.0, 1.0])

    def test_cdf_valid(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        x = np.full(8, 0.3)
        z = np.linspace(0, 1, 1001)
        F = z_cdf(ctx, x, z)
        assert abs(F[0]) <= 1e-12 and abs(F[-1] - 1) <= 1e-12
        assert np.all(np.diff(F) >= 0)

    def test_cdf_closed_form_sigma0(self):
        z = np.linspace(0, 1, 101)
        ref = (np.exp(z - 1) - exp(-1)) / (1 - exp(-1))
        np.testing.assert_allclose(z_cdf(CONST, np.full(2, 0.5), z), ref, atol=1e-13)

    def test_uniform_when_ell_vanishes(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        z = np.sort(sample_z(ctx, np.zeros(8), np.random.default_rng(10), size=100_000))
        i = np.arange(1, len(z) + 1)
        ks = max(np.max(i / len(z) - z), np.max(z - (i - 1) / len(z)))
        assert ks < 0.01

    def test_inverse_roundtrip(self):
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 2))
        x = np.full(8, 0.35)
        u = np.linspace(0.001, 0.999, 200)
        np.testing.assert_allclose(z_cdf(ctx, x, invert_z_cdf(ctx, x, u)), u, atol=1e-9)

    def test_custom_theta_sampler(self):
        custom = make_context(UNIFORM, ThetaSpec.custom(lambda x: np.sum(x, axis=-1)))
        closed = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        x = np.full(8, 0.3)
        u = np.linspace(0.01, 0.99, 25)
        np.testing.assert_allclose(invert_z_cdf(custom, x, u), invert_z_cdf(closed, x, u),
                                   atol=1e-8)


class TestEstimator:
    def test_linear_exact(self):
        a = np.arange(1, 9.0)
        f = make_linear(a)
        ctx = make_context(UNIFORM, ThetaSpec.norm_power(1, 1))
        x = np.full(8, 0.3)
        orc = QueryOracle(f)
        rng = np.random.default_rng(11)
        w = weight_integral(ctx, x)
        for _ in range(20):
            est = estimate_surrogate(ctx, orc, x, rng)
            np.testing.assert_allclose(est.g, w * a, rtol=1e-15)
            assert est.queries == 1
        assert orc.count == 20

    def test_zero_noise_unbiased(self):
        f = random_quadratic(8, seed=12)
        x = np.random.default_rng(13).random(8) * 0.4
        orc = QueryOracle(f)
        est = estimate_surrogate_batch(CONST, orc, x, 200_000, np.random.default_rng(14))
        exact = surrogate_exact(CONST, f, x)
        stderr = est.std(axis=0, ddof=1) / np.sqrt(len(est))
        assert np.all(np.abs(est.mean(axis=0) - exact) <= 3 * stderr)
        assert np.linalg.norm(est, axis=1).max() <= orc.B

    def test_rejects_zeroth_order(self):
        orc = QueryOracle(random_quadratic(3, seed=1), "zeroth")
        with pytest.raises(ValueError):
            estimate_surrogate(CONST, orc, np.full(3, 0.5), np.random.default_rng(0))


class TestLinearizationInequality:
    @pytest.mark.parametrize("name,f,theta,gamma", [
        ("dr", random_quadratic(8, seed=1), ThetaSpec.constant(), 1.0),
        ("weak", random_quadratic(8, seed=2, gamma=0.6), ThetaSpec.constant(), 0.6),
        ("np2", make_norm_power(8, 2), ThetaSpec.norm_power(1, 1), 1.0),
    ])
    def test_pairs_in_kstar(self, name, f, theta, gamma):
        ctx = make_context(UNIFORM, theta, gamma)
        Ks = maximal_convex_subset(UNIFORM)
        a = alpha_star(ctx, Ks)
        rng = np.random.default_rng(15)
        for _ in range(200):
            x = Ks.project(1.5 * rng.random(8))
            y = Ks.project(1.5 * rng.random(8))
            g = surrogate_exact(ctx, f, x)
            assert g @ (y - x) >= alpha_at(ctx, x) * f.value(y) - f.value(x) - 1e-6
            assert g @ (y - x) >= a * f.value(y) - f.value(x) - 1e-6


def test_context_validation():
    with pytest.raises(ValueError):
        LinearizationContext(0.0, ThetaSpec.constant(), 1.0)
    with pytest.raises(ValueError):
        LinearizationContext(1.0, ThetaSpec.constant(), 1.0, n_nodes=64)
