"""
Tests for the continuous-time dynamics and the lower-bound system.
"""

import math

import numpy as np
import pytest

from core.continuous import (
    Classification, LowerBoundProblem, OdeConfig, classify_start, eta_rate, fit_rate, generic_rate,
    in_trapping_region, ode_field, phase_sweep, power_ode_field, shoot_eta, simulate, simulate_power,
    trapping_forward_invariance_check, xi,
)
from core.integrators import State
from core.kinetic import PowerKinetic, QuadraticKinetic
from core.objective import ObjectiveSpec, builtin
from utils.exceptions import DomainError, StiffnessError


@pytest.fixture
def prob():
    return LowerBoundProblem(a=2.0, b=4.0, gamma=1.0)


class TestOdeField:
    """Test the conformal Hamiltonian vector field."""

    def test_damped_oscillator(self):
        f = builtin("power1d", {"b": 2})
        velocity, force = ode_field(PowerKinetic.classical(), f, 0.5, State(np.ones(1), np.zeros(1)))
        np.testing.assert_allclose(velocity, [0.0])
        np.testing.assert_allclose(force, [-1.0])

    def test_rest_at_minimizer(self, quartic):
        velocity, force = ode_field(PowerKinetic.matched(4.0, 4.0), quartic, 0.5, State(np.zeros(2), np.zeros(2)))
        np.testing.assert_array_equal(velocity, 0.0)
        np.testing.assert_array_equal(force, 0.0)

    def test_energy_dissipation_identity(self, quartic, rng):
        """<grad k(p), p'> + <grad f(x), x'> = -gamma <grad k(p), p>."""
        K = PowerKinetic.matched(4.0, 4.0)
        for _ in range(10):
            state = State(rng.standard_normal(2), rng.standard_normal(2))
            velocity, force = ode_field(K, quartic, 0.5, state)
            grad_k = K.grad(state.p)
            lhs = float(grad_k @ force + quartic.gradient(state.x) @ velocity)
            assert lhs == pytest.approx(-0.5 * float(grad_k @ state.p), rel=1e-12, abs=1e-12)


class TestSimulate:
    """Test adaptive simulation of the conformal Hamiltonian system."""

    def test_damped_oscillator_decays(self):
        f = builtin("power1d", {"b": 2})
        trajectory = simulate(PowerKinetic.classical(), f, 0.5, State(np.ones(1), np.zeros(1)), OdeConfig(40.0))
        assert trajectory.H[-1] <= 1e-6
        assert trajectory.max_energy_increase() <= 1e-8 * (1.0 + trajectory.H[0])
        assert trajectory.status == "completed"

    def test_quartic_energy_monotone(self, quartic):
        trajectory = simulate(PowerKinetic.matched(4.0, 4.0), quartic, 0.5,
                              State(np.ones(2), np.zeros(2)), OdeConfig(20.0, samples=400))
        assert trajectory.t.size == 400
        assert trajectory.max_energy_increase() <= 1e-8 * (1.0 + trajectory.H[0])
        assert trajectory.H[-1] < trajectory.H[0]

    def test_zero_horizon(self, quartic):
        trajectory = simulate(PowerKinetic.matched(4.0, 4.0), quartic, 0.5,
                              State(np.ones(2), np.zeros(2)), OdeConfig(0.0))
        assert trajectory.t.tolist() == [0.0]
        assert trajectory.H[0] == pytest.approx(16.0)

    def test_energy_floor_stops_run(self):
        f = builtin("power1d", {"b": 2})
        trajectory = simulate(PowerKinetic.classical(), f, 0.5, State(np.ones(1), np.zeros(1)),
                              OdeConfig(100.0, h_floor=1e-3))
        assert trajectory.status == "h_floor"
        assert trajectory.H[-1] == pytest.approx(1e-3, rel=1e-6)
        assert trajectory.t[-1] < 100.0

    def test_invalid_config(self):
        with pytest.raises(DomainError):
            OdeConfig(1.0, rel_tol=0.0)
        with pytest.raises(DomainError):
            OdeConfig(-1.0)

    def test_blow_up_reported_as_stiffness(self):
        """x'' = x^3 leaves every bounded set in finite time."""
        f = ObjectiveSpec("blowup", 1, lambda x: -x[0] ** 4 / 4.0, lambda x: -x ** 3,
                          x_star=np.zeros(1), f_star=0.0)
        with np.errstate(all='ignore'), pytest.raises(StiffnessError):
            simulate(PowerKinetic.classical(), f, 0.5, State(np.ones(1), np.zeros(1)), OdeConfig(10.0))

    def test_quadratic_preconditioning(self, rng):
        """(x_t, A^-1 p_t) does not depend on A."""
        d = 5
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        A = Q @ np.diag(np.geomspace(1.0, 1e3, d)) @ Q.T
        A = 0.5 * (A + A.T)
        x0 = rng.standard_normal(d)
        cfg = OdeConfig(10.0, samples=50)

        general = simulate(QuadraticKinetic(A), builtin("quadratic", {"matrix": A.tolist()}), 0.5,
                           State.at_rest(x0), cfg)
        identity = simulate(PowerKinetic.classical(), builtin("quadratic", {"matrix": np.eye(d).tolist()}), 0.5,
                            State.at_rest(x0), cfg)
        np.testing.assert_allclose(general.x, identity.x, atol=1e-6)
        np.testing.assert_allclose(np.linalg.solve(A, general.p.T).T, identity.p, atol=1e-6)

    @pytest.mark.slow
    def test_flow_converges_where_explicit_steps_stall(self, power4):
        """f = x^4/4 with k = 7/8 |p|^(8/7) reaches |x| <= 1e-4 by t = 200."""
        trajectory = simulate(PowerKinetic(8 / 7, 8 / 7), power4, 0.5, State.at_rest([1.0]), OdeConfig(200.0))
        assert abs(trajectory.x[-1, 0]) <= 1e-4


class TestLowerBoundProblem:
    """Test the one-dimensional power system."""

    def test_regimes(self, prob):
        assert prob.sublinear_regime
        assert prob.predicted_exponent == pytest.approx(0.5)
        assert prob.fast_rate == pytest.approx(1.0)
        assert prob.trapping_levels() == (1.5, 2.0, 4.0)

    def test_linear_regime_has_no_exponent(self):
        linear = LowerBoundProblem(2.0, 2.0, 1.0)
        assert not linear.sublinear_regime
        with pytest.raises(DomainError, match="linear"):
            linear.predicted_exponent

    def test_invalid_exponents(self):
        with pytest.raises(DomainError):
            LowerBoundProblem(1.0, 4.0, 1.0)

    def test_field_values(self, prob):
        assert power_ode_field(prob, (1.0, 0.0)) == (0.0, -1.0)
        assert power_ode_field(prob, (0.0, 1.0)) == (1.0, -1.0)

    def test_field_is_odd(self, prob, rng):
        for x, p in rng.standard_normal((10, 2)):
            dx, dp = power_ode_field(prob, (x, p))
            mx, mp = power_ode_field(prob, (-x, -p))
            assert (mx, mp) == pytest.approx((-dx, -dp))

    def test_central_symmetry_of_paths(self, prob):
        cfg = OdeConfig(20.0, samples=100)
        forward = simulate_power(prob, (0.8, 0.3), cfg)
        mirrored = simulate_power(prob, (-0.8, -0.3), cfg)
        np.testing.assert_allclose(mirrored.x, -forward.x, atol=1e-9)
        np.testing.assert_allclose(mirrored.p, -forward.p, atol=1e-9)

    def test_zero_horizon(self, prob):
        trajectory = simulate_power(prob, (1.0, 0.0), OdeConfig(0.0))
        assert trajectory.t.size == 1
        assert trajectory.H[0] == pytest.approx(0.25)


class TestTrapping:
    """Test trapping regions R_A."""

    def test_xi_closed_form(self, prob):
        assert xi(prob, 2.0) == pytest.approx(math.sqrt(1.0 / 12.0))

    def test_xi_vanishes_at_threshold(self, prob):
        assert xi(prob, 1.0 + 1e-12) < 1e-5

    def test_xi_below_threshold(self, prob):
        with pytest.raises(DomainError, match="exceed 1/gamma"):
            xi(prob, 0.5)

    def test_region_membership(self, prob):
        assert in_trapping_region(prob, 2.0, (0.1, -0.001))
        assert not in_trapping_region(prob, 2.0, (0.1, 0.0))
        assert not in_trapping_region(prob, 2.0, (0.3, -0.001))
        assert not in_trapping_region(prob, 2.0, (0.1, -0.01))

    def test_forward_invariance(self, prob):
        report = trapping_forward_invariance_check(prob, 2.0, (0.1, -0.001), 1e3)
        assert report.invariant
        assert report.first_violation is None
        assert report.samples > 1

    def test_zero_horizon(self, prob):
        assert trapping_forward_invariance_check(prob, 2.0, (0.1, -0.001), 0.0).invariant

    def test_start_outside_region(self, prob):
        with pytest.raises(DomainError, match="not in the trapping region"):
            trapping_forward_invariance_check(prob, 2.0, (0.5, 0.0), 10.0)


class TestRateFits:
    """Test linear/sublinear rate fits."""

    def test_sublinear_synthetic(self):
        t = np.geomspace(1.0, 1e3, 200)
        fit = fit_rate(t, t ** -0.5)
        assert fit.kind == "sublinear"
        assert fit.power == pytest.approx(0.5, abs=1e-6)

    def test_linear_synthetic(self):
        t = np.linspace(1.0, 20.0, 200)
        fit = fit_rate(t, np.exp(-t))
        assert fit.kind == "linear"
        assert fit.rate == pytest.approx(1.0, abs=1e-6)

    def test_window(self):
        t = np.linspace(1.0, 20.0, 200)
        fit = fit_rate(t, np.exp(-2.0 * t), window=(5.0, 10.0))
        assert fit.rate == pytest.approx(2.0, abs=1e-6)
        assert fit.n_points < 200

    def test_degenerate_window(self):
        with pytest.raises(DomainError, match="Degenerate"):
            fit_rate([1.0, 2.0], [1.0, 0.5])

    def test_phase_sweep(self, prob):
        paths = phase_sweep(prob, [0.2, 0.5], OdeConfig(5.0, samples=20))
        assert [theta for theta, _ in paths] == [0.2, 0.5]
        assert all(path.t.size == 20 for _, path in paths)

    @pytest.mark.slow
    def test_generic_start_is_sublinear(self, prob):
        fit = generic_rate(prob)
        assert fit.kind == "sublinear"
        assert abs(fit.power - prob.predicted_exponent) <= 0.05


class TestShooting:
    """Classification of starts and the exceptional path."""

    def test_small_start_is_slow(self, prob):
        assert classify_start(prob, 0.5 * xi(prob, 2.0)) is Classification.SLOW

    def test_large_start_crosses(self, prob):
        assert classify_start(prob, 5.0) is Classification.CROSS

    def test_mirrored_starts_share_labels(self, prob):
        """The field is odd, so (-theta, 0) behaves like (theta, 0) reflected."""
        slow = 0.4 * xi(prob, 1.5)
        assert classify_start(prob, slow) is Classification.SLOW
        assert classify_start(prob, -slow) is Classification.SLOW
        assert classify_start(prob, -5.0) is Classification.CROSS

    def test_origin_has_no_label(self, prob):
        with pytest.raises(DomainError, match="rest point"):
            classify_start(prob, 0.0)

    def test_shooting_needs_sublinear_regime(self):
        with pytest.raises(DomainError):
            shoot_eta(LowerBoundProblem(2.0, 2.0, 1.0))

    @pytest.mark.slow
    def test_eta_bracket_and_fast_path(self, prob):
        estimate = shoot_eta(prob, tol=1e-8)
        assert estimate.eta > 0.0
        assert estimate.width <= 1e-8 * estimate.lower
        assert classify_start(prob, estimate.lower) is Classification.SLOW
        assert classify_start(prob, estimate.upper) is Classification.CROSS

        fit, _ = eta_rate(prob, estimate)
        assert fit.kind == "linear"
        assert 0.9 * prob.fast_rate <= fit.rate <= 1.05 * prob.fast_rate
