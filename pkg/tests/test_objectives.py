import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upconcave.domains import ThetaSpec
from upconcave.objectives import (check_containment, check_oss, check_up_concave,
                                  dr_gamma, from_dict, gradient_fd_error, lyapunov_profile,
                                  make_linear, make_monotone_quadratic, make_norm_power,
                                  make_weakly_dr_quadratic, random_quadratic, sample_pairs,
                                  sum_objective)


def builtins():
    rng = np.random.default_rng(0)
    return [
        random_quadratic(6, seed=1),
        random_quadratic(6, seed=2, gamma=0.7),
        make_norm_power(6, 1),
        make_norm_power(6, 2),
        make_norm_power(6, 3.5),
        make_linear(rng.random(6)),
    ]


D2 = make_monotone_quadratic([2.0, 2.0], [[1.0, 1.0], [1.0, 1.0]])


class TestQuadratic:
    def test_linear_when_H_zero(self):
        f = make_monotone_quadratic(np.ones(3), np.zeros((3, 3)))
        for x in np.random.default_rng(0).random((5, 3)):
            np.testing.assert_array_equal(f.grad(x), np.ones(3))

    def test_small_instance(self):
        np.testing.assert_allclose(D2.grad(np.ones(2)), [0, 0])
        np.testing.assert_allclose(D2.grad(np.zeros(2)), [2, 2])
        assert D2.value(np.ones(2)) == pytest.approx(2.0)
        assert D2.value(np.zeros(2)) == 0.0

    def test_dr_property(self):
        x, y = sample_pairs(2, 1000, np.random.default_rng(1))
        assert np.all(D2.grad(y) <= D2.grad(x) + 1e-12)

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            make_monotone_quadratic([1.0, -1.0], np.zeros((2, 2)))
        with pytest.raises(ValueError):
            make_monotone_quadratic([1.0, 1.0], [[0.0, -1.0], [-1.0, 0.0]])

    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            make_monotone_quadratic([1.0, 1.0], [[3.0, 0.0], [0.0, 0.0]])

    def test_weak_gamma_matches_definition(self):
        # weak DR: gamma * grad_i(y) <= grad_i(x) for y >= x, tightest over the box
        f = random_quadratic(5, seed=3, gamma=0.6)
        assert f.gamma == pytest.approx(0.6, abs=1e-12)
        x, y = sample_pairs(5, 20000, np.random.default_rng(2))
        assert np.all(f.gamma * f.grad(y) <= f.grad(x) + 1e-12)
        assert dr_gamma(f.params["a"], f.params["H"]) == pytest.approx(f.gamma)

    def test_dr_quadratic_passes_up_concavity_on_dense_grid(self):
        # with theta = 1 and gamma = 1 both inequalities reduce to concavity along y - x
        g = np.linspace(0.01, 1, 40)
        X = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
        worst = 0.0
        for x in X[::7]:
            Y = X[np.all(X >= x, axis=1)]
            delta = D2.value(Y) - D2.value(x)
            diff = Y - x
            lo = delta - np.einsum("ij,ij->i", D2.grad(Y), diff)
            up = np.einsum("j,ij->i", D2.grad(x), diff) - delta
            worst = max(worst, -lo.min(), -up.min())
        assert worst <= 1e-9
        rep = check_up_concave(D2, 1.0, ThetaSpec.constant(), 10_000, 0)
        assert rep.max_violation <= 1e-9


class TestNormPower:
    def test_values(self):
        f = make_norm_power(2, 2)
        assert f.value(np.array([0.5, 0.5])) == pytest.approx(1.0)
        np.testing.assert_allclose(f.grad(np.array([0.5, 0.5])), [2.0, 2.0])

    def test_m1_is_linear(self):
        f = make_norm_power(3, 1)
        rep = check_up_concave(f, 1.0, ThetaSpec.constant(), 2000, 0)
        assert rep.max_violation <= 1e-12

    def test_upper_inequality_exact(self):
        rep = check_up_concave(make_norm_power(2, 2), 1.0, ThetaSpec.norm_power(1, 1), 10_000, 0)
        assert rep.upper_violation == 0.0
        assert rep.max_violation <= 1e-9

    def test_gradient_bound(self):
        for m in (1, 2, 3):
            f = make_norm_power(4, m)
            assert np.linalg.norm(f.grad(np.ones(4))) == pytest.approx(f.B)
            assert f.value(np.ones(4)) == pytest.approx(f.M0)

    def test_rejects_m_below_one(self):
        with pytest.raises(ValueError):
            make_norm_power(3, 0.5)


class TestCheckers:
    def test_linear_zero_violation(self):
        f = make_linear(np.arange(1, 5.0))
        for th in (ThetaSpec.constant(), ThetaSpec.norm_power(1, 1), ThetaSpec.norm_power(2, 2)):
            assert check_up_concave(f, 1.0, th, 5000, 1).max_violation <= 1e-12
        assert check_oss(f, 0.0, 5000, 1).max_violation == 0.0

    def test_monotone_quadratic(self):
        f = random_quadratic(6, seed=4)
        assert check_up_concave(f, 1.0, ThetaSpec.constant(), 10_000, 2).max_violation <= 1e-9
        assert check_oss(f, 0.0, 10_000, 2).max_violation == 0.0

    def test_norm_square(self):
        f = make_norm_power(5, 2)
        assert check_up_concave(f, 1.0, ThetaSpec.norm_power(1, 1), 10_000, 3).max_violation <= 1e-9
        assert check_oss(f, 1.0, 10_000, 3).max_violation == 0.0

    def test_oss_slack_by_hand(self):
        # 0.5 u'Hu = |u|^2 and the right side is 2 |u|^2 for f = |x|_1^2
        f = make_norm_power(3, 2)
        rng = np.random.default_rng(5)
        x, u = rng.random(3) + 0.1, rng.random(3)
        from upconcave.objectives import hessian_form
        assert 0.5 * hessian_form(f, x, u) == pytest.approx(u.sum() ** 2, rel=1e-6)
        rhs = u.sum() / x.sum() * (u @ f.grad(x))
        assert rhs == pytest.approx(2 * u.sum() ** 2)

    def test_oss_detects_too_small_sigma(self):
        assert check_oss(make_norm_power(4, 2), 0.3, 5000, 0).max_violation > 0.1

    def test_containment_report(self):
        rep = check_containment(make_norm_power(4, 2), 1.0, 5000, 1)
        assert rep.up_concave_sigma.max_violation <= 1e-12
        assert rep.oss.max_violation <= 1e-4
        assert rep.up_concave_2sigma.max_violation <= 1e-6

    def test_sigma_zero_checks_coincide(self):
        f = random_quadratic(4, seed=6)
        rep = check_containment(f, 0.0, 3000, 2)
        assert rep.up_concave_sigma.max_violation == rep.up_concave_2sigma.max_violation

    def test_seeded_checkers_are_deterministic(self):
        f = random_quadratic(4, seed=7, gamma=0.8)
        a = check_up_concave(f, 0.8, ThetaSpec.constant(), 1000, 9)
        b = check_up_concave(f, 0.8, ThetaSpec.constant(), 1000, 9)
        assert a.max_violation == b.max_violation


class TestInvariants:
    def test_gradient_consistency(self):
        rng = np.random.default_rng(8)
        for f in builtins():
            for x in rng.random((100, f.d)):
                assert gradient_fd_error(f, x) <= 1e-5

    def test_monotone_gradients(self):
        rng = np.random.default_rng(9)
        for f in builtins():
            assert np.all(f.grad(rng.random((1000, f.d))) >= -1e-9)

    def test_lyapunov_q_nonincreasing(self):
        rng = np.random.default_rng(10)
        for f, sigma in ((random_quadratic(6, seed=1), 0.0), (make_norm_power(6, 2), 0.5),
                         (make_norm_power(6, 3), 1.0)):
            x, y = sample_pairs(6, 100, rng)
            for a, b in zip(x, y):
                q = lyapunov_profile(f, sigma, a, b)
                assert np.all(np.diff(q) <= 1e-6)

    def test_certified_implies_monotone(self):
        rng = np.random.default_rng(11)
        for f in builtins():
            th = f.theta()
            assert check_up_concave(f, f.gamma, th, 2000, 12).max_violation <= 1e-9
            x, y = sample_pairs(f.d, 2000, rng)
            assert np.all(f.value(y) >= f.value(x) - 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000), st.floats(0.3, 1.0))
    def test_random_quadratic_certificate(self, d, seed, gamma):
        f = random_quadratic(d, seed=seed, gamma=gamma)
        assert f.gamma <= 1.0 and f.gamma >= gamma - 1e-9
        assert check_up_concave(f, f.gamma, ThetaSpec.constant(), 500, seed).max_violation <= 1e-9
        x = np.random.default_rng(seed).random((50, d))
        assert np.all(np.linalg.norm(f.grad(x), axis=1) <= f.B + 1e-12)


class TestSpecs:
    def test_from_dict(self):
        f = from_dict({"type": "quadratic", "a": [2, 2], "H": [[1, 1], [1, 1]]})
        assert f.value(np.ones(2)) == pytest.approx(2.0)
        g = from_dict({"type": "norm_power", "m": 2}, d=3)
        assert g.value(np.ones(3)) == pytest.approx(9.0)
        h = from_dict({"type": "quadratic", "seed": 3}, d=4)
        assert h.d == 4
        assert from_dict({"type": "linear", "a": [1, 2]}).value(np.ones(2)) == 3

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            from_dict({"type": "cubic"}, d=2)

    def test_sum_objective(self):
        fs = builtins()[:3]
        s = sum_objective(fs)
        x = np.full(6, 0.3)
        assert s.value(x) == pytest.approx(sum(f.value(x) for f in fs))
        np.testing.assert_allclose(s.grad(x), sum(f.grad(x) for f in fs))

    def test_weak_constructor_validates(self):
        with pytest.raises(ValueError):
            make_weakly_dr_quadratic([1.0, 1.0], [[0.0, 5.0], [5.0, 0.0]])
