"""Linearized mode evolution, closed-form oracle, decay certificates and
rotating-frame cancellations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from couette.domains import DomainKind, DomainSpec, build_grid
from couette.linear import (ModeState, beta_identity_defects, default_dt,
                            gaussian_mode, kelvin_oracle, kelvin_profile,
                            run_decay_certificate, step_linear,
                            step_linear_beta)
from couette.multipliers import HypoCoefficients, calibrated_coefficients


def plane_mode(nu=0.01, k=1.0, n=512, width=1.0):
    return gaussian_mode(DomainSpec(DomainKind.PLANE, nu), n, k, width=width)


class TestStepLinear:
    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step_linear(plane_mode(), 0.0)

    def test_rejects_transport_overrun(self):
        with pytest.raises(ValueError):
            step_linear(plane_mode(k=10.0), 1e3)

    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError):
            step_linear(plane_mode(), 0.01, scheme="euler")

    def test_norm_contracts(self):
        state = plane_mode()
        for _ in range(20):
            nxt = step_linear(state, 0.05)
            assert nxt.grid.norm(nxt.omega) <= state.grid.norm(state.omega)
            state = nxt

    def test_time_advances(self):
        state = step_linear(plane_mode(), 0.25)
        assert state.t == pytest.approx(0.25)

    def test_pure_diffusion_limit_small_k(self):
        """At tiny k the shear phase is negligible and a Fourier eigenmode
        of the periodicized grid decays by exp(-nu (eta^2 + k^2) t)."""
        nu, k = 0.01, 1e-6
        spec = DomainSpec(DomainKind.PLANE, nu)
        grid = build_grid(spec, 256)
        eta = 2.0 * np.pi * 3 / (grid.spacing * grid.resolution)
        state = ModeState(spec, grid, k, np.exp(1j * eta * grid.nodes))
        out = state
        for _ in range(10):
            out = step_linear(out, 0.1)
        expected = math.exp(-nu * (eta**2 + k**2) * 1.0)
        ratio = out.grid.norm(out.omega) / state.grid.norm(state.omega)
        assert ratio == pytest.approx(expected, rel=1e-8)

    def test_channel_boundary_values_preserved(self):
        state = gaussian_mode(DomainSpec(DomainKind.CHANNEL, 0.01), 129, 2.0)
        for _ in range(5):
            state = step_linear(state, 0.05)
        assert abs(state.omega[0]) < 1e-13
        assert abs(state.omega[-1]) < 1e-13


class TestKelvinOracle:
    def test_initial_time_identity(self):
        eta = np.linspace(-10, 10, 101)
        f = lambda z: np.exp(-(z**2))
        assert np.allclose(kelvin_oracle(0.01, 1.0, f, eta, 0.0), f(eta))

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            kelvin_oracle(0.01, 0.0, lambda z: z, np.zeros(3), 1.0)

    def test_satisfies_transport_diffusion_pde(self):
        """Finite-difference residual of
        d/dt w - k d/deta w + nu (k^2 + eta^2) w = 0."""
        nu, k, t = 0.02, 1.5, 0.7
        f = lambda z: np.exp(-(z**2) / 2.0)
        eta = np.linspace(-4.0, 4.0, 17)
        h = 1e-5
        wt = (kelvin_oracle(nu, k, f, eta, t + h)
              - kelvin_oracle(nu, k, f, eta, t - h)) / (2 * h)
        we = (kelvin_oracle(nu, k, f, eta + h, t)
              - kelvin_oracle(nu, k, f, eta - h, t)) / (2 * h)
        w = kelvin_oracle(nu, k, f, eta, t)
        resid = wt - k * we + nu * (k**2 + eta**2) * w
        assert np.max(np.abs(resid)) < 1e-6

    @pytest.mark.parametrize("scheme,tol", [("strang", 2e-5),
                                            ("yoshida4", 1e-9)])
    def test_solver_matches_oracle(self, scheme, tol):
        nu, k, T = 0.02, 1.0, 2.0
        state = plane_mode(nu=nu, k=k, n=512)
        f = lambda z: np.sqrt(np.pi) * np.exp(-(z**2) / 4.0)
        dt = 0.02
        for _ in range(int(round(T / dt))):
            state = step_linear(state, dt, scheme=scheme)
        ref = kelvin_profile(state.grid, nu, k, f, T)
        err = state.grid.norm(state.omega - ref) / state.grid.norm(ref)
        assert err < tol

    def test_scheme_orders(self):
        """Strang halves the error by 4x per dt halving; the composed scheme
        beats it by orders of magnitude at the same step."""
        nu, k, T = 0.02, 1.0, 1.0
        f = lambda z: np.sqrt(np.pi) * np.exp(-(z**2) / 4.0)

        def err(scheme, dt):
            state = plane_mode(nu=nu, k=k, n=512)
            for _ in range(int(round(T / dt))):
                state = step_linear(state, dt, scheme=scheme)
            ref = kelvin_profile(state.grid, nu, k, f, T)
            return state.grid.norm(state.omega - ref)

        e1, e2 = err("strang", 0.5), err("strang", 0.25)
        assert math.log2(e1 / e2) == pytest.approx(2.0, abs=0.1)
        assert err("yoshida4", 0.25) < 1e-3 * e2


class TestDefaultDt:
    def test_respects_transport_guard(self):
        state = plane_mode(k=10.0)
        dt = default_dt(state, horizon=100.0)
        ymax = np.max(np.abs(state.grid.nodes))
        assert abs(state.k) * ymax * dt <= 50.0

    def test_resolves_horizon(self):
        assert default_dt(plane_mode(k=1e-5), horizon=3.0) <= 3.0 / 50.0


class TestDecayCertificate:
    def test_plane_certificate_passes(self):
        coeffs = calibrated_coefficients(DomainKind.PLANE)
        state = plane_mode(nu=0.01, k=1.0)
        cert = run_decay_certificate(state, coeffs, horizon=4.0)
        assert cert.verdict
        assert cert.pointwise_margin >= 0.0
        assert cert.integrated_margin >= 0.0

    def test_channel_certificate_passes(self):
        coeffs = calibrated_coefficients(DomainKind.CHANNEL)
        state = gaussian_mode(DomainSpec(DomainKind.CHANNEL, 0.02), 129, 1.0)
        cert = run_decay_certificate(state, coeffs, horizon=10.0)
        assert cert.verdict

    def test_energy_series_decays(self):
        coeffs = calibrated_coefficients(DomainKind.PLANE)
        cert = run_decay_certificate(plane_mode(), coeffs, horizon=3.0)
        assert cert.E_k_series[-1] < cert.E_k_series[0]
        assert np.all(np.diff(cert.damping_integral) >= 0.0)

    def test_infeasible_rate_fails(self):
        """Demanding a pointwise rate far above the actual decay must flip
        the verdict; the checker reports failure rather than clipping."""
        coeffs = calibrated_coefficients(DomainKind.PLANE)
        state = plane_mode(nu=0.01, k=1.0)
        cert = run_decay_certificate(state, coeffs, horizon=4.0, c0=50.0)
        assert not cert.pointwise_ok


class TestBetaIdentities:
    def test_defects_at_roundoff(self):
        # the rotating frame lives on the plane, where differentiation
        # commutes with the damping operator and all five cancellations
        # are exact
        state = gaussian_mode(DomainSpec(DomainKind.PLANE, 0.01), 512, 1.5)
        defects = beta_identity_defects(state)
        assert set(defects) == {"base_energy", "derivative_energy",
                                "cross_term", "damping", "damping_derivative"}
        for name, val in defects.items():
            assert val < 1e-10, (name, val)

    def test_defects_stay_small_along_rotating_flow(self):
        spec = DomainSpec(DomainKind.BETA_PLANE, 0.01, coriolis_b=1.0)
        state = gaussian_mode(spec, 512, 1.0)
        for _ in range(10):
            state = step_linear_beta(state, 1.0, 0.05)
            worst = max(beta_identity_defects(state).values())
            assert worst < 1e-8

    def test_zero_coriolis_matches_plain_step(self):
        state = plane_mode()
        a = step_linear(state, 0.05)
        b = step_linear_beta(state, 0.0, 0.05)
        assert np.allclose(a.omega, b.omega)

    def test_coriolis_changes_dynamics(self):
        state = plane_mode()
        a = step_linear(state, 0.1)
        b = step_linear_beta(state, 1.0, 0.1)
        assert not np.allclose(a.omega, b.omega)


class TestModeStateValidation:
    def test_k_zero_rejected(self):
        spec = DomainSpec(DomainKind.PLANE, 0.01)
        grid = build_grid(spec, 64)
        with pytest.raises(ValueError):
            ModeState(spec, grid, 0.0, np.zeros(64, dtype=complex))

    def test_shape_mismatch_rejected(self):
        spec = DomainSpec(DomainKind.PLANE, 0.01)
        grid = build_grid(spec, 64)
        with pytest.raises(ValueError):
            ModeState(spec, grid, 1.0, np.zeros(32, dtype=complex))

    @settings(max_examples=10, deadline=None)
    @given(k=st.floats(0.2, 5.0), dt=st.floats(0.01, 0.2))
    def test_two_halves_compose(self, k, dt):
        """Strang with dt equals two Strang steps with dt/2 up to the
        scheme's local error."""
        state = plane_mode(k=k, n=128)
        one = step_linear(state, dt)
        two = step_linear(step_linear(state, dt / 2), dt / 2)
        scale = state.grid.norm(state.omega)
        assert state.grid.norm(one.omega - two.omega) <= 0.05 * dt**2 * scale
