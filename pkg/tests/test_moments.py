import numpy as np
import pytest

from critrct.meanfield import rho_star
from critrct.netlab.moments import estimate_moments, make_input_pair, moment_spec, theory_trajectory


def _symmetric_pair(half_dim, rho, rng):
    """Inputs of the form (a, -a): exactly half of each squared norm survives a ReLU."""
    a1, a2 = make_input_pair(half_dim, rho, rng)
    return np.concatenate([a1, -a1]), np.concatenate([a2, -a2])


class TestInputs:
    @pytest.mark.parametrize("rho", [-0.3, 0.0, 0.5, 1.0])
    def test_input_pair(self, rho):
        x1, x2 = make_input_pair(50, rho, np.random.default_rng(0), nu0=2.0)
        assert x1 @ x1 / 50 == pytest.approx(2.0)
        assert x2 @ x2 / 50 == pytest.approx(2.0)
        assert x1 @ x2 / np.sqrt((x1 @ x1) * (x2 @ x2)) == pytest.approx(rho, abs=1e-12)


class TestEstimates:
    def test_critical_variance_preserved(self):
        rng = np.random.default_rng(1)
        spec = moment_spec(1000, 10, 0.0)
        x1, x2 = _symmetric_pair(500, 0.5, rng)
        est = estimate_moments(spec, x1, x2, 200, rng, preactivation_input=True, method="projection")
        assert np.all(np.abs(est.nu1 - 1.0) <= 3 * est.nu1_se)

    def test_half_variance_decays_geometrically(self):
        rng = np.random.default_rng(2)
        spec = moment_spec(500, 6, 0.0, sigma_w_sq=1.0)
        x1, x2 = _symmetric_pair(250, 0.5, rng)
        est = estimate_moments(spec, x1, x2, 200, rng, preactivation_input=True, method="projection")
        expected = 2.0 ** -np.arange(1, 7)
        assert np.all(np.abs(est.nu1 - expected) <= 3 * est.nu1_se)

    def test_raw_inputs_skip_the_first_halving(self):
        rng = np.random.default_rng(3)
        spec = moment_spec(500, 4, 0.0, sigma_w_sq=1.0)
        x1, x2 = make_input_pair(500, 0.5, rng)
        est = estimate_moments(spec, x1, x2, 200, rng, method="projection")
        expected = 2.0 ** -np.arange(0, 4)
        assert np.all(np.abs(est.nu1 - expected) <= 3 * est.nu1_se)

    def test_dropout_correlation_follows_recurrence(self):
        rng = np.random.default_rng(4)
        spec = moment_spec(800, 10, 0.5)
        x1, x2 = make_input_pair(800, 1.0, rng)
        est = estimate_moments(spec, x1, x2, 300, rng, method="projection")
        theory = [s.rho for s in theory_trajectory(spec, x1, x2)]
        assert np.max(np.abs(est.rho - theory)) <= 0.02
        assert theory[-1] == pytest.approx(rho_star(0.5), abs=0.01)

    def test_preactivation_theory_uses_actual_inputs(self):
        rng = np.random.default_rng(10)
        spec = moment_spec(600, 6, 0.3)
        x1, x2 = make_input_pair(600, 0.3, rng)
        est = estimate_moments(spec, x1, x2, 300, rng, preactivation_input=True, method="projection")
        theory = theory_trajectory(spec, x1, x2, preactivation_input=True)
        nu = np.array([s.nu1 for s in theory])
        assert np.all(np.abs(est.nu1 - nu) <= 3 * est.nu1_se)

    def test_forward_and_projection_agree(self):
        spec = moment_spec(200, 5, 0.3)
        x1, x2 = make_input_pair(200, 0.6, np.random.default_rng(5))
        a = estimate_moments(spec, x1, x2, 300, np.random.default_rng(6), method="forward")
        b = estimate_moments(spec, x1, x2, 300, np.random.default_rng(7), method="projection")
        se_nu = np.sqrt(a.nu1_se ** 2 + b.nu1_se ** 2)
        se_rho = np.sqrt(a.rho_se ** 2 + b.rho_se ** 2)
        assert np.all(np.abs(a.nu1 - b.nu1) <= 4 * se_nu)
        assert np.all(np.abs(a.rho - b.rho) <= 4 * se_rho)

    def test_states(self):
        spec = moment_spec(50, 3, 0.1)
        x1, x2 = make_input_pair(50, 0.2, np.random.default_rng(8))
        est = estimate_moments(spec, x1, x2, 5, np.random.default_rng(9))
        states = est.states()
        assert len(states) == 3
        assert states[0].rho == pytest.approx(est.rho[0])

    def test_validation(self):
        spec = moment_spec(10, 2, 0.0)
        x = np.ones(10)
        with pytest.raises(ValueError):
            estimate_moments(spec, x, x, 1, np.random.default_rng(0))
        with pytest.raises(ValueError):
            estimate_moments(spec, x, np.ones(9), 5, np.random.default_rng(0))
        with pytest.raises(ValueError):
            estimate_moments(spec, x, x, 5, np.random.default_rng(0), method="magic")

    def test_deterministic(self):
        spec = moment_spec(30, 3, 0.3)
        x1, x2 = make_input_pair(30, 0.4, np.random.default_rng(0))
        a = estimate_moments(spec, x1, x2, 10, np.random.default_rng(1))
        b = estimate_moments(spec, x1, x2, 10, np.random.default_rng(1))
        assert np.array_equal(a.nu1, b.nu1) and np.array_equal(a.rho, b.rho)
