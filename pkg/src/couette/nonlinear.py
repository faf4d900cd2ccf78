"""2D pseudospectral solver for the full perturbation system.

Fields are Fourier in x over a large period 2 pi / dk (so the x-wavenumber
ladder k_j = j dk resolves the |k| < nu, nu <= |k| <= 1 and |k| > 1 bands)
and use the domain's y-basis per mode.  One step is a Strang split: an
explicit midpoint half-step of the advection nonlinearity, the exact
exponential linear step per mode, and a second nonlinear half-step.  A
monitor records the global energy and its integrated dissipations and checks
the bootstrap inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.fft import fft, ifft, fftfreq, rfft, irfft

from .domains import Basis, DomainKind, DomainSpec, YGrid, build_grid
from .energy import (DissipationAccumulators, sample_global, threshold_epsilon)
from .linear import ModeState
from .multipliers import HypoCoefficients, calibrated_coefficients, eval_lambda
from .operators import _sine_basis

ALIASING_TRIP = 1e-8
BLOWUP_FACTOR = 1e6
BOUNDARY_TOL = 1e-10


@dataclass
class FieldState:
    """Spectral field on the k-ladder k_j = j dk, j = 0 .. nk-1.

    omega_hat[j] holds the continuum mode amplitude omega_{k_j}(y); negative
    wavenumbers are implied by conjugate symmetry of real fields.  The
    accumulators integrate dissipation densities over the trajectory.
    """

    spec: DomainSpec
    grid: YGrid
    dk: float
    omega_hat: np.ndarray
    t: float = 0.0
    accumulators: DissipationAccumulators = dfield(
        default_factory=DissipationAccumulators)
    conjugate_symmetric: bool = True
    guard_ref: float | None = None

    def __post_init__(self):
        if self.dk <= 0.0:
            raise ValueError("ladder spacing dk must be positive")
        if self.dk > self.spec.nu / 4.0 + 1e-15:
            raise ValueError(
                f"dk = {self.dk} exceeds nu/4 = {self.spec.nu / 4.0}; the "
                "ladder would not resolve the low-frequency band")
        self.omega_hat = np.ascontiguousarray(self.omega_hat, dtype=complex)
        if self.omega_hat.ndim != 2 or \
                self.omega_hat.shape[1] != self.grid.resolution:
            raise ValueError("omega_hat must be (nk, grid.resolution)")
        if self.grid.basis is Basis.FOURIER_PERIODICIZED:
            self._eta = 2.0 * np.pi * fftfreq(self.grid.resolution,
                                              d=self.grid.spacing)
            self._basis = None
        else:
            self._basis = _sine_basis(self.grid.nodes)
            self._eta = None
        if self.guard_ref is None:
            self.guard_ref = max(self.enstrophy(), 1e-300)

    # -- ladder bookkeeping ---------------------------------------------------

    @property
    def nk(self) -> int:
        return self.omega_hat.shape[0]

    @property
    def nx(self) -> int:
        return 2 * (self.nk - 1)

    @property
    def ks(self) -> np.ndarray:
        return self.dk * np.arange(self.nk)

    @property
    def dealias_mask(self) -> np.ndarray:
        """True on retained modes under the 2/3 rule (x-direction)."""
        j = np.arange(self.nk)
        return j <= (2 * (self.nk - 1)) // 3

    def nonzero_modes(self):
        """Per-mode views with k != 0, shaped for the energy module."""
        for j in range(1, self.nk):
            yield ModeState(self.spec, self.grid, self.ks[j],
                            self.omega_hat[j], self.t)

    def enstrophy(self) -> float:
        """Sum over the ladder of ||omega_k||^2 (negative k counted)."""
        n2 = np.sum(self.grid.weights[None, :] * np.abs(self.omega_hat) ** 2,
                    axis=1)
        return float(n2[0] + 2.0 * np.sum(n2[1:]))

    def copy_with(self, omega_hat: np.ndarray, t: float) -> "FieldState":
        return FieldState(self.spec, self.grid, self.dk, omega_hat, t,
                          self.accumulators, guard_ref=self.guard_ref)

    # -- per-profile y operations (k-independent) -----------------------------

    def _dy(self, rows: np.ndarray) -> np.ndarray:
        """d/dy of each row, in the grid's spectral basis."""
        if self._basis is None:
            return ifft(1j * self._eta[None, :] * fft(rows, axis=1), axis=1)
        synth, analysis, synth_deriv, mu = self._basis
        a = rows[:, 1:-1] @ analysis.T
        return (a * mu[None, :]) @ synth_deriv.T

    def _poisson_k0(self, w0: np.ndarray) -> np.ndarray:
        """Solve phi'' = omega for the k = 0 mode (zero-mean gauge on the
        periodicized plane, Dirichlet on sine domains)."""
        if self._basis is None:
            sym = -self._eta**2
            sym[0] = 1.0
            a = fft(w0)
            a[0] = 0.0
            return ifft(a / sym)
        synth, analysis, _, mu = self._basis
        phi = np.zeros_like(w0)
        phi[1:-1] = synth @ ((analysis @ w0[1:-1]) / (-(mu**2)))
        return phi

    def streamfunctions(self) -> np.ndarray:
        """phi_hat rows: Poisson solves per mode, k = 0 gauged as above.

        All k != 0 rows share the same spectral basis, so the solves are
        batched into two matrix products with per-mode symbols."""
        phi = np.zeros_like(self.omega_hat)
        phi[0] = self._poisson_k0(self.omega_hat[0])
        ks = self.ks[1:]
        if self._basis is None:
            sym = -(self._eta[None, :] ** 2) - ks[:, None] ** 2
            phi[1:] = ifft(fft(self.omega_hat[1:], axis=1) / sym, axis=1)
        else:
            synth, analysis, _, mu = self._basis
            a = self.omega_hat[1:, 1:-1] @ analysis.T
            a /= -(mu[None, :] ** 2) - ks[:, None] ** 2
            phi[1:, 1:-1] = a @ synth.T
        return phi

    def velocity_hat(self) -> tuple[np.ndarray, np.ndarray]:
        """Spectral rows of u = (-d phi/dy, d phi/dx)."""
        phi = self.streamfunctions()
        ux = -self._dy(phi)
        uy = 1j * self.ks[:, None] * phi
        return ux, uy


def _to_physical(rows: np.ndarray, nx: int) -> np.ndarray:
    """Inverse rfft over the ladder axis, continuum-amplitude normalized."""
    return irfft(rows * nx, n=nx, axis=0)


def _from_physical(phys: np.ndarray, nk: int) -> np.ndarray:
    nx = phys.shape[0]
    return rfft(phys, axis=0)[:nk] / nx


@dataclass
class NonlinearIncrement:
    """ℕL rows plus the aliasing-band energy fraction that was removed."""

    rows: np.ndarray
    aliased_fraction: float


def _velocity_and_gradients(field: FieldState):
    """(ux, uy, wx, wy) rows with one shared analysis of omega.

    Same values as velocity_hat() plus the omega gradient, but the Poisson
    solve reuses the omega coefficients (a_phi = a_omega / symbol) instead
    of re-analyzing phi, halving the transform count."""
    w = field.omega_hat
    ks = field.ks
    if field._basis is None:
        a_w = fft(w, axis=1)
        wy = ifft(1j * field._eta[None, :] * a_w, axis=1)
        sym = -(field._eta[None, :] ** 2) - ks[1:, None] ** 2
        a_phi = np.empty_like(a_w)
        a_phi[1:] = a_w[1:] / sym
        zero = field._eta == 0.0
        a_phi[0] = a_w[0] / np.where(zero, 1.0, -(field._eta**2))
        a_phi[0, zero] = 0.0
        phi = ifft(a_phi, axis=1)
        ux = -ifft(1j * field._eta[None, :] * a_phi, axis=1)
    else:
        synth, analysis, synth_deriv, mu = field._basis
        a_w = w[:, 1:-1] @ analysis.T
        wy = (a_w * mu[None, :]) @ synth_deriv.T
        a_phi = a_w / (-(mu[None, :] ** 2) - ks[:, None] ** 2)
        a_phi[0] = a_w[0] / (-(mu**2))
        phi = np.zeros_like(w)
        phi[:, 1:-1] = a_phi @ synth.T
        ux = -(a_phi * mu[None, :]) @ synth_deriv.T
    uy = 1j * ks[:, None] * phi
    wx = 1j * ks[:, None] * w
    return ux, uy, wx, wy


def compute_nonlinearity(field: FieldState) -> NonlinearIncrement:
    """-(u . grad omega) on the ladder, evaluated pseudospectrally.

    Velocities and gradients are synthesized on the 2/3-dealiased ladder,
    multiplied in physical x, and the product is re-masked; the reported
    aliased fraction is the L2 mass the output mask removed.
    """
    mask = field.dealias_mask[:, None]
    ux, uy, wx, wy = _velocity_and_gradients(field)
    nx = field.nx
    ux_p = _to_physical(np.where(mask, ux, 0.0), nx)
    uy_p = _to_physical(np.where(mask, uy, 0.0), nx)
    wx_p = _to_physical(np.where(mask, wx, 0.0), nx)
    wy_p = _to_physical(np.where(mask, wy, 0.0), nx)
    prod = -(ux_p * wx_p + uy_p * wy_p)
    rows = _from_physical(prod, field.nk)
    total = np.sum(np.abs(rows) ** 2)
    masked = np.sum(np.abs(np.where(mask, 0.0, rows)) ** 2)
    frac = float(masked / total) if total > 0.0 else 0.0
    rows = np.where(mask, rows, 0.0)
    if field._basis is not None:
        rows[:, 0] = 0.0
        rows[:, -1] = 0.0
    return NonlinearIncrement(rows, frac)


def incompressibility_defect(field: FieldState) -> float:
    """Relative size of div u = ik u_x + d u_y/dy over the ladder."""
    ux, uy = field.velocity_hat()
    div = 1j * field.ks[:, None] * ux + field._dy(uy)
    num = sum(field.grid.norm2(div[j]) for j in range(field.nk))
    den = sum(field.grid.norm2(ux[j]) + field.grid.norm2(uy[j])
              for j in range(field.nk))
    return math.sqrt(num / den) if den > 0.0 else 0.0


def _nl_half_step(field: FieldState, half_dt: float) -> np.ndarray:
    """Explicit midpoint integration of the advection term over half_dt."""
    inc1 = compute_nonlinearity(field)
    mid = field.copy_with(field.omega_hat + 0.5 * half_dt * inc1.rows, field.t)
    inc2 = compute_nonlinearity(mid)
    field.last_aliased_fraction = max(inc1.aliased_fraction,
                                      inc2.aliased_fraction)
    return field.omega_hat + half_dt * inc2.rows


def _basis_multiply(field: FieldState, rows: np.ndarray,
                    factors: np.ndarray) -> np.ndarray:
    """Apply per-mode diagonal factors in the shared y-spectral basis."""
    if field._basis is None:
        return ifft(factors * fft(rows, axis=1), axis=1)
    synth, analysis, _, _ = field._basis
    out = np.zeros_like(rows)
    out[:, 1:-1] = (factors * (rows[:, 1:-1] @ analysis.T)) @ synth.T
    return out


def _strang_rows(field: FieldState, rows: np.ndarray, ks: np.ndarray,
                 h: float) -> np.ndarray:
    """One transport-diffusion Strang step of every row at once; the same
    exact exponentials as the per-mode path, batched into matrix products."""
    nu = field.spec.nu
    mu2 = field._eta**2 if field._basis is None else field._basis[3] ** 2
    half = np.exp(-nu * (h / 2.0) * (mu2[None, :] + ks[:, None] ** 2))
    phase = np.exp(-1j * h * np.outer(ks, field.grid.nodes))
    w = _basis_multiply(field, rows, half)
    return _basis_multiply(field, phase * w, half)


def _advance_linear_rows(field: FieldState, w: np.ndarray,
                         dt: float) -> np.ndarray:
    """Advance the k != 0 rows of w by the exact-exponential linear flow,
    with the rotation phase between Strang halves when Coriolis is on.
    Mirrors step_linear / step_linear_beta, including the growth guard."""
    ks = field.ks[1:]
    rows = w[1:]
    ymax = float(np.max(np.abs(field.grid.nodes)))
    if ks[-1] * ymax * dt > 50.0:
        raise ValueError("time step too large for the transport phase")
    b = field.spec.coriolis_b
    if b == 0.0:
        out = _strang_rows(field, rows, ks, dt)
    else:
        mu2 = field._eta**2 if field._basis is None else field._basis[3] ** 2
        rot = np.exp(1j * b * ks[:, None] * dt
                     / (mu2[None, :] + ks[:, None] ** 2))
        out = _strang_rows(field, rows, ks, dt / 2.0)
        out = _basis_multiply(field, out, rot)
        out = _strang_rows(field, out, ks, dt / 2.0)
    wgt = field.grid.weights[None, :]
    n0 = np.sqrt(np.sum(wgt * np.abs(rows) ** 2, axis=1))
    n1 = np.sqrt(np.sum(wgt * np.abs(out) ** 2, axis=1))
    grew = n1 > n0 * (1.0 + 1e-8) + 1e-300
    if np.any(grew):
        j = int(np.argmax(grew))
        raise FloatingPointError(
            f"instability at k = {ks[j]}: norm grew {n0[j]:.3e} -> "
            f"{n1[j]:.3e} over dt={dt}")
    return out


def _heat_factor(field: FieldState, dt: float) -> np.ndarray:
    """exp(nu dt d^2/dy^2) eigenvalues for the k = 0 mode."""
    nu = field.spec.nu
    if field._basis is None:
        return np.exp(-nu * dt * field._eta**2)
    _, _, _, mu = field._basis
    return np.exp(-nu * dt * mu**2)


def step_nonlinear(field: FieldState, dt: float) -> FieldState:
    """One Strang step: nonlinear half, exact linear step per mode,
    nonlinear half; Dirichlet boundaries re-enforced and a blow-up guard
    checked against the initial enstrophy."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    w = _nl_half_step(field, dt / 2.0)
    alias1 = getattr(field, "last_aliased_fraction", 0.0)

    out = np.empty_like(w)
    heat = _heat_factor(field, dt)
    if field._basis is None:
        out[0] = ifft(heat * fft(w[0]))
    else:
        out[0] = 0.0
        synth, analysis, _, _ = field._basis
        out[0, 1:-1] = synth @ (heat * (analysis @ w[0, 1:-1]))
    out[1:] = _advance_linear_rows(field, w, dt)

    half2 = field.copy_with(out, field.t + dt)
    w2 = _nl_half_step(half2, dt / 2.0)
    alias2 = getattr(half2, "last_aliased_fraction", 0.0)
    if field._basis is not None:
        w2[:, 0] = 0.0
        w2[:, -1] = 0.0
    stepped = field.copy_with(w2, field.t + dt)
    stepped.last_aliased_fraction = max(alias1, alias2)
    if stepped.enstrophy() > BLOWUP_FACTOR * field.guard_ref:
        raise FloatingPointError(
            f"blow-up guard tripped at t = {stepped.t:.3f}: enstrophy "
            f"{stepped.enstrophy():.3e} vs initial {field.guard_ref:.3e}")
    return stepped


def default_field_dt(field: FieldState) -> float:
    """Transport-phase and fastest-decay resolving step size.

    Both caps use the largest mode retained by the dealias mask: rows above
    it are zeroed by every nonlinearity evaluation and never carry energy."""
    j = np.arange(field.nk)
    kmax = field.dk * float(j[field.dealias_mask][-1])
    ymax = float(np.max(np.abs(field.grid.nodes)))
    lam_max = eval_lambda(field.spec.kind, field.spec.nu, kmax)
    return min(0.5 / (kmax * ymax), 0.1 / lam_max)


@dataclass
class BootstrapMonitor:
    """Recorded global energy trajectory and the bootstrap verdicts."""

    E0: float
    times: list
    E_series: list
    D_series: list
    threshold_ok: bool
    bootstrap_ok: bool
    first_violation: float | None
    resolution_flag: bool
    amplitude_ratio: float
    c: float

    def record(self, t: float, E: float, D: float):
        self.times.append(t)
        self.E_series.append(E)
        self.D_series.append(D)
        if E > 2.0 * self.E0 and self.threshold_ok:
            self.threshold_ok = False
            self.first_violation = t
        if E + 2.0 * self.c * D > 2.0 * self.E0:
            self.bootstrap_ok = False
            if self.first_violation is None:
                self.first_violation = t


def seeded_field(spec: DomainSpec, resolution: tuple[int, int],
                 dk: float | None = None, seed: int = 0,
                 n_active: int = 3) -> FieldState:
    """Random smooth initial data on the first few nonzero ladder modes."""
    nx, ny = resolution
    if nx % 2 != 0:
        raise ValueError("nx must be even")
    if dk is None:
        dk = spec.nu / 4.0
    grid = build_grid(spec, ny)
    nk = nx // 2 + 1
    rng = np.random.default_rng(seed)
    y = grid.nodes
    if spec.kind is DomainKind.CHANNEL:
        envelope = np.sin(np.pi * (y + 1.0) / 2.0) ** 2
    elif spec.kind is DomainKind.HALF_PLANE:
        c = min(5.0, spec.y_extent / 3.0)
        envelope = np.exp(-((y - c) ** 2))
        envelope[0] = envelope[-1] = 0.0
    else:
        envelope = np.exp(-(y**2))
    omega_hat = np.zeros((nk, ny), dtype=complex)
    L = y[-1] - y[0] if spec.kind is not DomainKind.PLANE else 2.0 * spec.y_extent
    for j in range(1, min(n_active, nk - 1) + 1):
        amp = rng.standard_normal() + 1j * rng.standard_normal()
        wobble = np.cos((j + 1) * np.pi * (y - y[0]) / L)
        omega_hat[j] = amp * envelope * wobble
    return FieldState(spec, grid, dk, omega_hat)


def rescale_to_energy(field: FieldState, coeffs: HypoCoefficients,
                      target_E: float) -> FieldState:
    """Scale the field so its global energy equals target_E (E is quadratic
    in omega, so the factor is a square root)."""
    s = sample_global(field, coeffs)
    E = s.E1 + s.E2
    if E <= 0.0:
        if target_E == 0.0:
            return field
        raise ValueError("cannot rescale a zero field to positive energy")
    factor = math.sqrt(target_E / E)
    return FieldState(field.spec, field.grid, field.dk,
                      factor * field.omega_hat, field.t)


def run_bootstrap_experiment(spec: DomainSpec, amplitude_ratio: float,
                             horizon: float | None = None,
                             resolution: tuple[int, int] = (64, 65),
                             coeffs: HypoCoefficients | None = None,
                             delta: float = 1.0, seed: int = 0,
                             dt: float | None = None,
                             sample_every: int = 1) -> BootstrapMonitor:
    """Evolve random data of size amplitude_ratio * epsilon(nu) and monitor
    the bootstrap inequalities E(t) <= 2 E(0) and E + 2cD <= 2 E(0).

    amplitude_ratio may reach 4; above 1 the outcome is recorded without
    any pass guarantee.
    """
    if not (0.0 <= amplitude_ratio <= 4.0):
        raise ValueError("amplitude_ratio must lie in [0, 4]")
    if coeffs is None:
        coeffs = calibrated_coefficients(spec.kind)
    if horizon is None:
        horizon = 10.0 / (coeffs.c * spec.nu)
    field = seeded_field(spec, resolution, seed=seed)
    eps = threshold_epsilon(spec.nu, delta)
    target = (amplitude_ratio * eps) ** 2
    field = rescale_to_energy(field, coeffs, target)

    if dt is None:
        dt = default_field_dt(field)
    nsteps = max(1, int(math.ceil(horizon / dt)))
    dt = horizon / nsteps

    s0 = sample_global(field, coeffs)
    field.accumulators.push(s0)
    E0 = s0.E1 + s0.E2
    monitor = BootstrapMonitor(E0=E0, times=[], E_series=[], D_series=[],
                               threshold_ok=True, bootstrap_ok=True,
                               first_violation=None, resolution_flag=False,
                               amplitude_ratio=amplitude_ratio, c=coeffs.c)
    monitor.record(field.t, E0, 0.0)
    for n in range(1, nsteps + 1):
        field = step_nonlinear(field, dt)
        if getattr(field, "last_aliased_fraction", 0.0) > ALIASING_TRIP:
            monitor.resolution_flag = True
        if n % sample_every == 0 or n == nsteps:
            s = sample_global(field, coeffs)
            field.accumulators.push(s)
            acc = field.accumulators
            monitor.record(field.t, s.E1 + s.E2, acc.D1 + acc.D2)
    return monitor
