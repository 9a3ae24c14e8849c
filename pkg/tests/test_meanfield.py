import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critrct import meanfield as mf
from critrct.errors import ConvergenceError, SignalOverflowError


def _rho_star_oracle(theta):
    """Root of f(rho) - rho at 50 digits, bracketed away from the trivial root."""
    mpmath.mp.dps = 50
    t = mpmath.mpf(theta)

    def h(r):
        return (1 - t) * ((r * mpmath.asin(r) + mpmath.sqrt(1 - r * r)) / mpmath.pi + r / 2) - r

    return float(mpmath.findroot(h, (mpmath.mpf("1e-6"), mpmath.mpf(1) - mpmath.mpf("1e-9")),
                                 solver="anderson"))


class TestHyperParams:
    def test_critical_init_values(self):
        assert mf.critical_init(0.0) == mf.HyperParams(2.0, 0.0, 0.0)
        assert mf.critical_init(0.5).sigma_w_sq == 1.0
        assert mf.critical_init(0.3).sigma_w_sq == pytest.approx(1.4, abs=1e-15)

    @pytest.mark.parametrize("theta", [-0.1, 1.0, 1.5])
    def test_bad_theta(self, theta):
        with pytest.raises(ValueError):
            mf.critical_init(theta)

    @pytest.mark.parametrize("kwargs", [
        dict(sigma_w_sq=0.0), dict(sigma_w_sq=1.0, sigma_b_sq=-1.0), dict(sigma_w_sq=1.0, theta=1.0),
    ])
    def test_invariants(self, kwargs):
        with pytest.raises(ValueError):
            mf.HyperParams(**kwargs)


class TestSignalState:
    def test_rho_must_match_kappa(self):
        with pytest.raises(ValueError):
            mf.SignalState(1.0, 1.0, 0.5, 0.6)

    def test_from_inputs(self):
        x1 = np.array([1.0, 0.0, 1.0, 0.0])
        x2 = np.array([1.0, 1.0, 0.0, 0.0])
        s = mf.SignalState.from_inputs(x1, x2)
        assert (s.nu1, s.nu2, s.kappa) == (0.5, 0.5, 0.25)
        assert s.rho == pytest.approx(0.5)

    def test_nonpositive_variance(self):
        with pytest.raises(ValueError):
            mf.SignalState(0.0, 1.0, 0.0, 0.0)


class TestGMap:
    def test_at_one(self):
        assert mf.g_map(1.0) == 0.5

    def test_half(self):
        mpmath.mp.dps = 30
        r = mpmath.mpf("0.5")
        expected = (r * mpmath.asin(r) + mpmath.sqrt(1 - r * r)) / (mpmath.pi * r)
        assert mf.g_map(0.5) == pytest.approx(float(expected), abs=1e-15)
        assert mf.g_map(0.5) == pytest.approx(0.717995, abs=1e-6)

    def test_product_limit(self):
        assert 1e-9 * mf.g_map(1e-9) == pytest.approx(1 / math.pi, rel=1e-8)

    @pytest.mark.parametrize("rho", [0.0, 1.5, -1.01])
    def test_domain(self, rho):
        with pytest.raises(ValueError):
            mf.g_map(rho)


class TestSteps:
    @given(theta=st.floats(0.0, 0.95), nu=st.floats(1e-6, 1e6))
    def test_critical_fixed_point(self, theta, nu):
        assert mf.variance_step(mf.critical_init(theta), nu) == pytest.approx(nu, rel=1e-12)

    def test_variance_examples(self):
        assert mf.variance_step(mf.HyperParams(1.0, 0.0, 0.0), 1.0) == 0.5
        assert mf.variance_step(mf.HyperParams(1.0, 0.1, 0.5), 2.0) == pytest.approx(2.1)

    def test_correlation_examples(self):
        one = mf.SignalState(1.0, 1.0, 1.0, 1.0)
        assert mf.correlation_step(mf.critical_init(0.0), one).rho == pytest.approx(1.0, abs=1e-15)
        assert mf.correlation_step(mf.critical_init(0.5), one).rho == pytest.approx(0.5, abs=1e-15)
        zero = mf.SignalState(1.0, 1.0, 0.0, 0.0)
        assert mf.correlation_step(mf.critical_init(0.0), zero).rho == pytest.approx(1 / math.pi)

    def test_input_layer_has_no_halving(self):
        params = mf.HyperParams(2.0, 0.0, 0.5)
        s = mf.input_layer_step(params, mf.SignalState(1.0, 1.0, 0.5, 0.5))
        assert s.nu1 == pytest.approx(4.0)
        assert s.kappa == pytest.approx(1.0)


def _brute_force(sw, sb, theta, nu1, nu2, kappa, layers):
    out = []
    for _ in range(layers):
        rho = kappa / math.sqrt(nu1 * nu2)
        rho = max(-1.0, min(1.0, rho))
        g_part = (rho * math.asin(rho) + math.sqrt(1 - rho * rho)) / math.pi
        new_kappa = sw / 2 * math.sqrt(nu1 * nu2) * (g_part + rho / 2) + sb
        nu1 = sw / (2 * (1 - theta)) * nu1 + sb
        nu2 = sw / (2 * (1 - theta)) * nu2 + sb
        kappa = new_kappa
        out.append((nu1, nu2, kappa))
    return out


class TestPropagate:
    def test_critical_keeps_variance(self):
        traj = mf.propagate(mf.critical_init(0.3), mf.SignalState(1.7, 1.7, 0.3, 0.3 / 1.7), 10)
        assert len(traj) == 10
        assert all(s.nu1 == pytest.approx(1.7, rel=1e-12) for s in traj)

    def test_geometric_decay(self):
        traj = mf.propagate(mf.HyperParams(1.0), mf.SignalState(1.0, 1.0, 1.0, 1.0), 3)
        assert [s.nu1 for s in traj] == pytest.approx([0.5, 0.25, 0.125], abs=1e-15)

    def test_rho_approaches_fixed_point_monotonically(self):
        traj = mf.propagate(mf.critical_init(0.5), mf.SignalState(1.0, 1.0, 1.0, 1.0), 200)
        rhos = [s.rho for s in traj]
        assert all(a > b for a, b in zip(rhos, rhos[1:]) if a - b > 1e-15)
        assert rhos[-1] == pytest.approx(mf.rho_star(0.5), abs=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            sw = rng.uniform(0.2, 4.0)
            sb = rng.uniform(0.0, 0.5)
            theta = rng.uniform(0.0, 0.8)
            nu1, nu2 = rng.uniform(0.1, 3.0, 2)
            rho0 = rng.uniform(-1, 1)
            kappa = rho0 * math.sqrt(nu1 * nu2)
            got = mf.propagate(mf.HyperParams(sw, sb, theta), mf.SignalState.from_moments(nu1, nu2, kappa), 12)
            ref = _brute_force(sw, sb, theta, nu1, nu2, kappa, 12)
            for s, (a, b, k) in zip(got, ref):
                assert s.nu1 == pytest.approx(a, rel=1e-12)
                assert s.nu2 == pytest.approx(b, rel=1e-12)
                assert s.kappa == pytest.approx(k, rel=1e-12, abs=1e-12)

    def test_overflow_reported(self):
        with pytest.raises(SignalOverflowError) as info:
            mf.propagate(mf.HyperParams(1e30), mf.SignalState(1.0, 1.0, 1.0, 1.0), 50)
        assert info.value.layer > 1
        assert len(info.value.trajectory) == info.value.layer - 1

    def test_underflow_reported(self):
        with pytest.raises(SignalOverflowError):
            mf.propagate(mf.HyperParams(1e-30), mf.SignalState(1.0, 1.0, 1.0, 1.0), 50)

    def test_zero_layers(self):
        with pytest.raises(ValueError):
            mf.propagate(mf.critical_init(0), mf.SignalState(1.0, 1.0, 1.0, 1.0), 0)


class TestFixedPoint:
    def test_no_dropout(self):
        assert mf.rho_star(0.0) == 1.0

    @pytest.mark.parametrize("theta", [0.1, 0.3, 0.5, 0.7])
    def test_against_high_precision_root(self, theta):
        assert mf.rho_star(theta) == pytest.approx(_rho_star_oracle(theta), abs=1e-10)

    def test_quoted_values(self):
        # the quoted values are rounded to 3 figures
        assert mf.rho_star(0.5) == pytest.approx(0.218, abs=1e-3)
        assert mf.rho_star(0.3) == pytest.approx(0.366, abs=1e-3)

    @pytest.mark.parametrize("theta", [0.1, 0.3, 0.5, 0.7])
    def test_consistency_and_contraction(self, theta):
        tol = 1e-12
        r = mf.rho_star(theta, tol=tol)
        assert abs(mf.correlation_map(r, theta) - r) < 10 * tol
        assert mf.correlation_slope(r, theta) < 1

    def test_non_convergence(self):
        with pytest.raises(ConvergenceError) as info:
            mf.rho_star(0.5, tol=1e-12, max_iter=3)
        assert 0 < info.value.last < 1


class TestDepthScales:
    def test_values(self):
        assert mf.correlation_depth_scale(0.0) == math.inf
        assert mf.correlation_depth_scale(0.5) == pytest.approx(4.78, abs=0.01)
        assert mf.correlation_depth_scale(0.1) == pytest.approx(13.7, abs=0.1)

    def test_floors(self):
        assert [math.floor(mf.correlation_depth_scale(t)) for t in (0.1, 0.3, 0.5)] == [13, 7, 4]

    def test_decreasing(self):
        grid = np.round(np.arange(0.05, 0.701, 0.05), 2)
        scales = [mf.correlation_depth_scale(float(t)) for t in grid]
        assert all(a > b for a, b in zip(scales, scales[1:]))

    def test_variance_bound_examples(self):
        assert mf.variance_depth_bound(mf.critical_init(0.2)) == math.inf
        assert mf.variance_depth_bound(mf.HyperParams(1.0)) == pytest.approx(126.0, abs=0.1)
        assert mf.variance_depth_bound(mf.HyperParams(4.0)) == pytest.approx(128.0, abs=0.1)

    @pytest.mark.parametrize("theta", [0.0, 0.3])
    @pytest.mark.parametrize("c", [1.5, 2.0, 4.0])
    def test_vanish_and_explode_at_same_rate(self, theta, c):
        crit = 2 * (1 - theta)
        below = mf.variance_depth_bound(mf.HyperParams(crit / c, 0.0, theta))
        above = mf.variance_depth_bound(mf.HyperParams(crit * c, 0.0, theta))
        assert below == pytest.approx(above, rel=0.02)

    def test_bound_predicts_float32_underflow(self):
        params = mf.HyperParams(1.0)
        depth = mf.variance_depth_bound(params, limits=mf.FloatLimits.for_dtype(np.float32))
        nu = np.float32(1.0)
        layers = 0
        while nu >= np.finfo(np.float32).tiny:
            nu = np.float32(nu * np.float32(params.gain))
            layers += 1
        # the bound is the last depth at which the variance is still representable
        assert layers == math.floor(depth) + 1

    def test_depth_scales_bundle(self):
        ds = mf.depth_scales(mf.HyperParams(1.0, 0.0, 0.5))
        assert ds.ell_nu == math.inf
        assert ds.rho_star == mf.rho_star(0.5)


@settings(max_examples=50, deadline=None)
@given(theta=st.floats(0.01, 0.9))
def test_fixed_point_below_one(theta):
    r = mf.rho_star(theta)
    assert 0 < r < 1
