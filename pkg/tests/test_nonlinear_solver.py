"""Pseudospectral field evolution: structure, conservation, guards and the
bootstrap monitor."""

import math

import numpy as np
import pytest

from couette.domains import DomainKind, DomainSpec, build_grid
from couette.energy import sample_global, threshold_epsilon
from couette.linear import step_linear
from couette.multipliers import calibrated_coefficients
from couette.nonlinear import (BootstrapMonitor, FieldState,
                               compute_nonlinearity, default_field_dt,
                               incompressibility_defect, rescale_to_energy,
                               run_bootstrap_experiment, seeded_field,
                               step_nonlinear)


def channel_field(nu=0.05, resolution=(32, 65), seed=0):
    return seeded_field(DomainSpec(DomainKind.CHANNEL, nu), resolution,
                        seed=seed)


def plane_field(nu=0.05, resolution=(32, 128), seed=0):
    return seeded_field(DomainSpec(DomainKind.PLANE, nu), resolution,
                        seed=seed)


class TestFieldState:
    def test_ladder_spacing_guard(self):
        spec = DomainSpec(DomainKind.PLANE, 0.01)
        grid = build_grid(spec, 64)
        with pytest.raises(ValueError):
            FieldState(spec, grid, dk=0.01, omega_hat=np.zeros((17, 64)))

    def test_shape_guard(self):
        spec = DomainSpec(DomainKind.PLANE, 0.05)
        grid = build_grid(spec, 64)
        with pytest.raises(ValueError):
            FieldState(spec, grid, dk=0.01, omega_hat=np.zeros((17, 32)))

    def test_ladder_layout(self):
        f = plane_field(resolution=(32, 128))
        assert f.nk == 17
        assert f.nx == 32
        assert f.ks[0] == 0.0
        assert f.ks[1] == pytest.approx(f.dk)

    def test_enstrophy_counts_negative_modes(self):
        f = plane_field()
        single = sum(f.grid.norm2(f.omega_hat[j]) for j in range(f.nk))
        zero = f.grid.norm2(f.omega_hat[0])
        assert f.enstrophy() == pytest.approx(2.0 * single - zero, rel=1e-12)

    def test_seed_determinism(self):
        a, b = channel_field(seed=7), channel_field(seed=7)
        assert np.array_equal(a.omega_hat, b.omega_hat)
        c = channel_field(seed=8)
        assert not np.allclose(a.omega_hat, c.omega_hat)

    def test_incompressibility(self):
        for f in (plane_field(), channel_field()):
            assert incompressibility_defect(f) < 1e-10


class TestNonlinearity:
    def test_nonlinearity_conserves_enstrophy_flux(self):
        """The advection term transports vorticity, so <NL, omega> summed
        over the ladder vanishes (with negative modes implied)."""
        f = channel_field()
        inc = compute_nonlinearity(f)
        total = 0.0
        for j in range(f.nk):
            mult = 1.0 if j == 0 else 2.0
            total += mult * np.real(f.grid.inner(inc.rows[j], f.omega_hat[j]))
        scale = math.sqrt(sum(f.grid.norm2(r) for r in inc.rows)
                          * f.enstrophy())
        assert abs(total) < 1e-7 * scale

    def test_nonlinearity_is_quadratic(self):
        f = channel_field()
        inc1 = compute_nonlinearity(f)
        f2 = f.copy_with(3.0 * f.omega_hat, f.t)
        inc2 = compute_nonlinearity(f2)
        assert np.allclose(inc2.rows, 9.0 * inc1.rows, rtol=1e-10, atol=1e-12)

    def test_dealias_band_empty(self):
        f = channel_field()
        inc = compute_nonlinearity(f)
        assert np.all(inc.rows[~f.dealias_mask] == 0.0)

    def test_zero_field_fixed_point(self):
        f = channel_field()
        zero = f.copy_with(np.zeros_like(f.omega_hat), 0.0)
        inc = compute_nonlinearity(zero)
        assert np.all(inc.rows == 0.0)
        out = step_nonlinear(zero, 0.1)
        assert np.all(out.omega_hat == 0.0)


class TestStepNonlinear:
    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step_nonlinear(channel_field(), 0.0)

    def test_boundary_values_enforced(self):
        f = channel_field()
        out = step_nonlinear(f, default_field_dt(f))
        assert np.all(np.abs(out.omega_hat[:, 0]) < 1e-13)
        assert np.all(np.abs(out.omega_hat[:, -1]) < 1e-13)

    def test_near_inviscid_enstrophy_conservation(self):
        """With tiny viscosity over a short window the nonlinearity only
        rearranges enstrophy across the ladder."""
        spec = DomainSpec(DomainKind.CHANNEL, 1e-4)
        f = seeded_field(spec, (32, 65), seed=1)
        z0 = f.enstrophy()
        for _ in range(10):
            f = step_nonlinear(f, 0.05)
        # viscous loss bound: enstrophy only decreases, and slowly
        assert f.enstrophy() <= z0 * (1.0 + 1e-10)
        assert f.enstrophy() >= z0 * 0.9

    def test_matches_linear_flow_for_tiny_amplitude(self):
        """At vanishing amplitude each mode follows the linear solver."""
        f = channel_field()
        coeffs = calibrated_coefficients(DomainKind.CHANNEL)
        f = rescale_to_energy(f, coeffs, 1e-20)
        dt = 0.01
        stepped = f
        for _ in range(10):
            stepped = step_nonlinear(stepped, dt)
        for ms in f.nonzero_modes():
            if f.grid.norm(ms.omega) == 0.0:
                continue
            lin = ms
            for _ in range(10):
                lin = step_linear(lin, dt)
            j = int(round(ms.k / f.dk))
            err = f.grid.norm(stepped.omega_hat[j] - lin.omega)
            assert err < 1e-5 * f.grid.norm(lin.omega)

    def test_blowup_guard_trips(self):
        f = channel_field()
        f.guard_ref = f.enstrophy() * 1e-10
        big = f.copy_with(1e3 * f.omega_hat, 0.0)
        big.guard_ref = f.guard_ref
        with pytest.raises(FloatingPointError):
            step_nonlinear(big, default_field_dt(big))


class TestBootstrapMachinery:
    def test_rescale_hits_target(self):
        f = channel_field()
        coeffs = calibrated_coefficients(DomainKind.CHANNEL)
        out = rescale_to_energy(f, coeffs, 1e-4)
        s = sample_global(out, coeffs)
        assert s.E1 + s.E2 == pytest.approx(1e-4, rel=1e-10)

    def test_rescale_zero_field_rejected(self):
        f = channel_field()
        zero = f.copy_with(np.zeros_like(f.omega_hat), 0.0)
        coeffs = calibrated_coefficients(DomainKind.CHANNEL)
        with pytest.raises(ValueError):
            rescale_to_energy(zero, coeffs, 1.0)

    def test_monitor_flags_threshold_violation(self):
        mon = BootstrapMonitor(E0=1.0, times=[], E_series=[], D_series=[],
                               threshold_ok=True, bootstrap_ok=True,
                               first_violation=None, resolution_flag=False,
                               amplitude_ratio=0.5, c=0.01)
        mon.record(0.0, 1.0, 0.0)
        mon.record(1.0, 2.5, 0.0)
        assert not mon.threshold_ok
        assert mon.first_violation == 1.0

    def test_monitor_flags_bootstrap_violation(self):
        mon = BootstrapMonitor(E0=1.0, times=[], E_series=[], D_series=[],
                               threshold_ok=True, bootstrap_ok=True,
                               first_violation=None, resolution_flag=False,
                               amplitude_ratio=0.5, c=0.5)
        mon.record(0.0, 1.0, 0.0)
        mon.record(1.0, 1.5, 1.0)
        assert mon.threshold_ok
        assert not mon.bootstrap_ok

    def test_amplitude_ratio_range(self):
        spec = DomainSpec(DomainKind.CHANNEL, 0.05)
        with pytest.raises(ValueError):
            run_bootstrap_experiment(spec, -0.1, horizon=1.0)
        with pytest.raises(ValueError):
            run_bootstrap_experiment(spec, 4.5, horizon=1.0)

    def test_short_bootstrap_run(self):
        spec = DomainSpec(DomainKind.CHANNEL, 0.05)
        mon = run_bootstrap_experiment(spec, 0.5, horizon=5.0,
                                       resolution=(32, 65))
        assert mon.threshold_ok and mon.bootstrap_ok
        assert mon.first_violation is None
        assert not mon.resolution_flag
        assert mon.times[-1] == pytest.approx(5.0)
        assert max(mon.E_series) <= 2.0 * mon.E0

    def test_zero_amplitude_stays_zero(self):
        spec = DomainSpec(DomainKind.CHANNEL, 0.05)
        mon = run_bootstrap_experiment(spec, 0.0, horizon=1.0,
                                       resolution=(32, 65))
        assert mon.E0 == 0.0
        assert max(mon.E_series) == 0.0

    def test_threshold_scale(self):
        eps = threshold_epsilon(0.05, 1.0)
        assert 0.0 < eps < 1.0
