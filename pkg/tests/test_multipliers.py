"""Decay multipliers, weights, ghost multiplier and coefficient feasibility."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from couette.domains import DomainKind
from couette.multipliers import (JK_NORM_BOUND, HypoCoefficients,
                                 calibrated_coefficients, eval_lambda,
                                 eval_weights, ghost_multiplier,
                                 conservative_coefficients,
                                 validate_coefficients)


class TestLambda:
    def test_high_frequency_value(self):
        nu = 1e-3
        assert eval_lambda(DomainKind.PLANE, nu, 8.0) == pytest.approx(
            nu ** (1 / 3) * 8.0 ** (2 / 3))

    def test_plane_low_frequency_value(self):
        nu = 1e-2
        k = 1e-3
        assert eval_lambda(DomainKind.PLANE, nu, k) == pytest.approx(k**2 / nu)

    def test_channel_low_frequency_value(self):
        nu = 1e-2
        assert eval_lambda(DomainKind.CHANNEL, nu, 1e-3) == pytest.approx(nu)

    def test_continuity_at_crossover(self):
        nu = 1e-2
        for kind in (DomainKind.PLANE, DomainKind.CHANNEL):
            lo = eval_lambda(kind, nu, nu * (1 - 1e-9))
            hi = eval_lambda(kind, nu, nu * (1 + 1e-9))
            assert lo == pytest.approx(hi, rel=1e-6)

    def test_sign_independence(self):
        assert eval_lambda(DomainKind.PLANE, 1e-3, -2.0) == \
            eval_lambda(DomainKind.PLANE, 1e-3, 2.0)

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            eval_lambda(DomainKind.PLANE, 1e-3, 0.0)

    def test_vectorized(self):
        ks = np.array([1e-4, 1e-2, 1.0])
        out = eval_lambda(DomainKind.PLANE, 1e-3, ks)
        assert out.shape == ks.shape

    @settings(max_examples=50, deadline=None)
    @given(nu=st.floats(1e-6, 0.5), k=st.floats(1e-6, 100.0))
    def test_positive(self, nu, k):
        assert eval_lambda(DomainKind.PLANE, nu, k) > 0.0
        assert eval_lambda(DomainKind.CHANNEL, nu, k) > 0.0


class TestWeights:
    def test_squares(self):
        alpha, beta, A, B = eval_weights(1e-3, 2.0, DomainKind.PLANE)
        assert alpha == pytest.approx(A**2)
        assert beta == pytest.approx(B**2)

    def test_high_frequency_forms(self):
        nu, k = 1e-3, 4.0
        alpha, beta, _, _ = eval_weights(nu, k, DomainKind.PLANE)
        assert alpha == pytest.approx(nu ** (2 / 3) * k ** (-2 / 3))
        assert beta == pytest.approx(nu ** (1 / 3) * k ** (-4 / 3))

    def test_plane_low_frequency_forms(self):
        nu, k = 1e-2, 1e-4
        alpha, beta, _, _ = eval_weights(nu, k, DomainKind.PLANE)
        assert alpha == 1.0
        assert beta == pytest.approx(1.0 / nu)

    def test_channel_keeps_high_frequency_beta(self):
        nu, k = 1e-2, 1e-4
        _, beta, _, _ = eval_weights(nu, k, DomainKind.CHANNEL)
        assert beta == pytest.approx(nu ** (1 / 3) * k ** (-4 / 3))

    @settings(max_examples=50, deadline=None)
    @given(nu=st.floats(1e-6, 0.5), k=st.floats(1e-6, 100.0))
    def test_alpha_lambda_below_nu(self, nu, k):
        """alpha * lambda <= nu, the inequality that lets the derivative
        dissipation absorb the weighted derivative energy."""
        alpha, _, _, _ = eval_weights(nu, k, DomainKind.PLANE)
        lam = eval_lambda(DomainKind.PLANE, nu, k)
        assert alpha * lam <= nu * (1 + 1e-12)


class TestGhostMultiplier:
    def test_initial_value(self):
        assert ghost_multiplier(1e-3, 1.0, 0.1, 1.0, 0.0) == 1.0

    def test_limit_value(self):
        # arctan u - u/(1+u^2) -> pi/2 as u -> infinity
        val = ghost_multiplier(1e-3, 1.0, 0.1, 2.0, 1e12)
        assert val == pytest.approx(math.exp(2.0**2 * math.pi / 4.0), rel=1e-9)

    def test_bounds_and_monotonicity(self):
        t = np.linspace(0.0, 5e3, 400)
        for J in (1.0, 1.5, 3.0):
            M = ghost_multiplier(1e-2, 0.5, 0.2, J, t)
            assert np.all(M >= 1.0)
            assert np.all(M <= math.exp(4.0 * J**2 / 3.0))
            assert np.all(np.diff(M) >= -1e-12)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            ghost_multiplier(1e-3, 1.0, 0.1, 1.0, -1.0)

    def test_matches_ode_quadrature(self):
        """log M equals the quadrature of the designed ODE's rate."""
        nu, k, c, J = 1e-3, 2.0, 0.07, 1.5
        lam = eval_lambda(DomainKind.PLANE, nu, k)
        rate = lambda s: c * J**2 * lam * (c * lam * s) ** 2 \
            / (1.0 + (c * lam * s) ** 2) ** 2
        for t in (3.0, 50.0, 800.0):
            integral, err = quad(rate, 0.0, t, limit=200)
            assert math.log(ghost_multiplier(nu, k, c, J, t)) == \
                pytest.approx(integral, rel=1e-8, abs=1e-12)


class TestFeasibility:
    def test_conservative_set_passes(self):
        coeffs = conservative_coefficients()
        report = validate_coefficients(coeffs)
        assert report.feasible, report.failed()
        assert report.c0 > 0.0
        assert report.c1 == 0.25

    def test_violations_reported_by_name(self):
        bad = HypoCoefficients(c_alpha=0.5, c_beta=0.5, c_tau=0.5, c=0.1)
        report = validate_coefficients(bad)
        assert not report.feasible
        assert any("c_tau" in name for name in report.failed())

    def test_nonpositive_coefficients_rejected(self):
        with pytest.raises(ValueError):
            validate_coefficients(
                HypoCoefficients(c_alpha=-1.0, c_beta=0.1, c_tau=0.1, c=0.1))

    def test_k0_floor_depends_on_operator_norm(self):
        coeffs = conservative_coefficients(jk_norm=JK_NORM_BOUND)
        assert coeffs.K0 >= 32.0 * (1.0 + JK_NORM_BOUND)

    def test_calibrated_sets_have_positive_margins(self):
        for kind in (DomainKind.PLANE, DomainKind.CHANNEL):
            coeffs = calibrated_coefficients(kind)
            report = validate_coefficients(coeffs)
            assert report.c0 > 0.0
            # the certified decay constant sits below the pointwise rate
            assert 2.0 * coeffs.c <= report.c0

    def test_with_c(self):
        coeffs = calibrated_coefficients(DomainKind.PLANE)
        assert coeffs.with_c(0.123).c == 0.123
