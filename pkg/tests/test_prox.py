import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize, minimize_scalar

from pdrank import (compress, dual_softplus_prox, prox_ridge_centered,
                    softplus_prox, spectral_norm)


def sigmoid(t):
    t = np.asarray(t, dtype=float)
    z = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0, z) / (1.0 + z)


def root_residual(u, x0, w):
    return -sigmoid(1.0 - u) + (u - x0) / w


def bisect_root(x0, w, iters=200):
    lo, hi = x0, x0 + w
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if root_residual(mid, x0, w) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestProxRidgeCentered:
    def test_pure_centering(self):
        out = prox_ridge_centered(np.array([1.0, 2.0, 3.0]), gamma=0.0)
        assert np.allclose(out, [-1.0, 0.0, 1.0])

    def test_shrink_then_center(self):
        out = prox_ridge_centered(np.array([1.0, 2.0, 3.0]), gamma=0.01, tau=1.0)
        want = np.array([1.0, 2.0, 3.0]) / 1.02
        want -= want.mean()
        assert np.allclose(out, want, atol=1e-12)
        assert np.allclose(out, [-0.98039216, 0.0, 0.98039216], atol=1e-6)

    def test_against_constrained_minimizer(self):
        # independent oracle: minimize tau*gamma||u||^2 + 0.5||u - x||^2
        # subject to sum(u) = 0 with a generic numerical solver
        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.standard_normal(6)
            gamma = float(rng.uniform(0.0, 2.0))
            tau = float(rng.uniform(0.1, 3.0))
            res = minimize(
                lambda u: tau * gamma * np.dot(u, u) + 0.5 * np.dot(u - x, u - x),
                x0=np.zeros(6), method="SLSQP",
                constraints={"type": "eq", "fun": lambda u: u.sum()},
                options={"ftol": 1e-14, "maxiter": 500})
            out = prox_ridge_centered(x, gamma, tau)
            assert np.allclose(out, res.x, atol=1e-6)

    def test_zero_mean_fixed_point(self):
        x = np.array([1.0, -1.0, 2.0, -2.0])
        assert np.allclose(prox_ridge_centered(x, gamma=0.0), x)

    def test_first_order_condition(self):
        # output is zero-mean and u*(1+2*gamma*tau) - x is a constant vector
        rng = np.random.default_rng(8)
        for _ in range(25):
            x = rng.standard_normal(rng.integers(2, 9))
            gamma = float(rng.uniform(0, 3))
            tau = float(rng.uniform(0.01, 5))
            u = prox_ridge_centered(x, gamma, tau)
            assert abs(u.sum()) <= 1e-10 * u.size
            resid = u * (1.0 + 2.0 * gamma * tau) - x
            assert np.ptp(resid) <= 1e-9

    def test_errors(self):
        with pytest.raises(ValueError):
            prox_ridge_centered(np.array([1.0, np.nan]), 0.1)
        with pytest.raises(ValueError):
            prox_ridge_centered(np.array([1.0]), gamma=-0.1)
        with pytest.raises(ValueError):
            prox_ridge_centered(np.array([1.0]), gamma=0.1, tau=0.0)


class TestSoftplusProx:
    def test_unit_case_matches_bisection_oracle(self):
        u_oracle = bisect_root(1.0, 1.0)
        assert u_oracle == pytest.approx(1.4010581375, abs=1e-9)
        u = softplus_prox(1.0, 1.0)
        assert abs(u - u_oracle) <= 1e-9

    def test_bracket_collapses_with_tiny_weight(self):
        u = softplus_prox(1.0, 1e-8)
        assert 0.0 <= u - 1.0 <= 1e-8

    def test_far_right_tail_bound(self):
        # sigmoid at the left bracket end bounds the gap
        for w in (1.0, 0.3, 1e-3):
            u = softplus_prox(10.0, w)
            assert u - 10.0 <= w * sigmoid(1.0 - 10.0) + 1e-15

    def test_vector_battery_residual_and_bracket(self):
        rng = np.random.default_rng(99)
        x0 = rng.uniform(-10, 10, 10_000)
        w = 10.0 ** rng.uniform(np.log10(0.05), 3, 10_000)
        u = softplus_prox(x0, w)
        r = root_residual(u, x0, w)
        assert np.abs(r).max() <= 1e-12
        assert np.all(u > x0)
        assert np.all(u < x0 + w)

    @given(st.floats(-10, 10), st.floats(1e-3, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_scalar_contract(self, x0, w):
        u = softplus_prox(x0, w)
        assert abs(root_residual(u, x0, w)) <= 1e-12
        assert x0 <= u <= x0 + w

    def test_errors(self):
        with pytest.raises(ValueError):
            softplus_prox(1.0, 0.0)
        with pytest.raises(ValueError):
            softplus_prox(float("nan"), 1.0)


class TestDualSoftplusProx:
    def test_vanishing_weights_give_identity(self):
        v = np.array([0.3, -1.5, 2.0])
        out = dual_softplus_prox(v, np.full(3, 1e-12), sigma=1.0)
        assert np.allclose(out, v, atol=1e-10)

    def test_single_component_example(self):
        u = bisect_root(1.0, 1.0)
        out = dual_softplus_prox(np.array([1.0]), np.array([1.0]), sigma=1.0)
        assert out[0] == pytest.approx(1.0 - u, abs=1e-9)

    def test_moreau_identity_against_scalar_minimizer(self):
        # prox_{sigma g*}(v) + sigma * prox_{g/sigma}(v/sigma) = v, with the
        # inner prox solved independently by bounded scalar minimization
        rng = np.random.default_rng(123)
        v = rng.uniform(-3, 3, 50)
        w = 10.0 ** rng.uniform(-1, 1, 50)
        sigma = 0.7
        out = dual_softplus_prox(v, w, sigma)
        worst = 0.0
        for k in range(50):
            def objective(u):
                return (w[k] * np.log1p(np.exp(1.0 - u))
                        + 0.5 * sigma * (u - v[k] / sigma) ** 2)
            lo, hi = v[k] / sigma, v[k] / sigma + w[k] / sigma
            res = minimize_scalar(objective, bounds=(lo - 1.0, hi + 1.0),
                                  method="bounded",
                                  options={"xatol": 1e-12, "maxiter": 500})
            worst = max(worst, abs(out[k] + sigma * res.x - v[k]))
        assert worst <= 1e-8

    def test_output_strictly_inside_negative_weight_box(self):
        rng = np.random.default_rng(5)
        v = rng.uniform(-5, 5, 200)
        w = 10.0 ** rng.uniform(-2, 2, 200)
        out = dual_softplus_prox(v, w, sigma=0.3)
        assert np.all(out <= 0.0)
        assert np.all(out >= -w)

    def test_gap_init_does_not_change_result(self):
        rng = np.random.default_rng(6)
        v = rng.uniform(-3, 3, 100)
        w = 10.0 ** rng.uniform(-1, 2, 100)
        cold = dual_softplus_prox(v, w, sigma=0.5)
        warm = dual_softplus_prox(v, w, sigma=0.5, gap_init=cold / -0.5)
        assert np.allclose(cold, warm, atol=1e-11)

    def test_errors(self):
        v = np.array([1.0])
        with pytest.raises(ValueError):
            dual_softplus_prox(v, np.array([1.0]), sigma=0.0)
        with pytest.raises(ValueError):
            dual_softplus_prox(v, np.array([-1.0]), sigma=1.0)
        with pytest.raises(ValueError):
            dual_softplus_prox(v, np.array([1.0, 2.0]), sigma=1.0)


class TestSpectralNorm:
    def test_single_comparison(self):
        ds = compress([(0, 1, 1)], num_items=2)
        assert spectral_norm(ds) == pytest.approx(np.sqrt(2), rel=1e-4)

    def test_repeated_pair_counts_multiplicity(self):
        ds = compress([(0, 1, 1)] * 7, num_items=2)
        assert ds.num_entries == 1
        assert spectral_norm(ds) == pytest.approx(np.sqrt(14), rel=1e-4)

    def test_dense_three_items(self):
        ds = compress([(0, 1, 1), (0, 2, 1), (1, 2, 1)], num_items=3)
        assert spectral_norm(ds) == pytest.approx(np.sqrt(3), rel=1e-4)

    def test_rayleigh_lower_bound(self):
        from pdrank import signed_matvec
        rng = np.random.default_rng(17)
        raw = [(int(a), int(b), 1) for a, b in rng.integers(0, 8, (40, 2))
               if a != b]
        ds = compress(raw, num_items=8)
        est = spectral_norm(ds)
        counts = ds.counts.astype(float)
        for _ in range(100):
            v = rng.standard_normal(8)
            v /= np.linalg.norm(v)
            av = signed_matvec(ds, v)
            ratio = np.sqrt(float(np.dot(counts * av, av)))
            assert ratio <= est * (1.0 + 1e-4)

    def test_gershgorin_upper_bound(self):
        rng = np.random.default_rng(18)
        raw = [(int(a), int(b), 1, int(c)) for a, b, c in
               zip(rng.integers(0, 10, 60), rng.integers(0, 10, 60),
                   rng.integers(1, 9, 60)) if a != b]
        ds = compress(raw, num_items=10)
        est = spectral_norm(ds)
        degree = np.bincount(ds.items_i, weights=ds.counts, minlength=10) \
            + np.bincount(ds.items_j, weights=ds.counts, minlength=10)
        assert est <= np.sqrt(2.0 * degree.max()) * (1.0 + 1e-6)

    def test_empty_rejected(self):
        ds = compress([], num_items=3)
        with pytest.raises(ValueError):
            spectral_norm(ds)
