"""Hypocoercive mode energies, dissipations, global functionals and the
stability threshold.

The mode energy E_k augments ||omega_k||^2 with a weighted derivative term,
a beta cross term and two terms built on the inviscid-damping operator; its
dissipation D_k splits into five nonnegative components.  Global functionals
integrate the mode energies over the k-ladder with time-dependent weights
(a polynomial-over-ghost-multiplier weight on the plane family, a plain
exponential on the channel) and accumulate time-integrated dissipations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .domains import DomainKind
from .multipliers import HypoCoefficients, eval_lambda, eval_weights, ghost_multiplier

DISSIPATION_COMPONENTS = ("gamma", "alpha", "beta", "tau", "tau_alpha")


@dataclass(frozen=True)
class EnergyBreakdown:
    """E_k and the five unweighted dissipation components at one mode."""

    E_k: float
    D_gamma: float
    D_alpha: float
    D_beta: float
    D_tau: float
    D_tau_alpha: float
    k: float
    nu: float

    def D_total(self, coeffs: HypoCoefficients) -> float:
        """D_k with the coefficient weights applied."""
        return (self.D_gamma + coeffs.c_alpha * self.D_alpha
                + coeffs.c_beta * self.D_beta + coeffs.c_tau * self.D_tau
                + coeffs.c_tau * coeffs.c_alpha * self.D_tau_alpha)

    def components(self) -> dict:
        return {"gamma": self.D_gamma, "alpha": self.D_alpha,
                "beta": self.D_beta, "tau": self.D_tau,
                "tau_alpha": self.D_tau_alpha}


def mode_energy(state, coeffs: HypoCoefficients,
                kind: DomainKind | None = None) -> EnergyBreakdown:
    """Evaluate E_k and its dissipation components for one mode state.

    The state carries omega, the solved streamfunction phi, its grid and
    operator workspace.  On the channel the beta cross term is dropped from
    the energy for |k| < nu while the beta dissipation is retained.
    """
    if kind is None:
        kind = state.spec.kind
    k = state.k
    if k == 0.0:
        raise ValueError("mode energy is defined for k != 0 only")
    nu = state.spec.nu
    g = state.grid
    ops = state.ops
    omega = state.omega
    phi = state.phi

    lam = eval_lambda(kind, nu, k)
    alpha, beta, _, _ = eval_weights(nu, k, kind)
    ca, cb, ct = coeffs.c_alpha, coeffs.c_beta, coeffs.c_tau

    dyw = ops.derivative(omega)
    base = g.norm2(omega)
    e = base + ca * alpha * g.norm2(dyw)
    drop_beta_cross = kind is DomainKind.CHANNEL and abs(k) < nu
    if not drop_beta_cross:
        e -= cb * beta * np.real(g.inner(1j * k * omega, dyw))
    if ct > 0.0:
        jw = ops.apply_jk(omega)
        jdyw = ops.apply_jk(dyw)
        e += ct * np.real(g.inner(jw, omega))
        e += ct * ca * alpha * np.real(g.inner(jdyw, dyw))

    dyphi = ops.derivative(phi)
    d2phi = ops.derivative(dyphi)
    d_gamma = nu * ops.gradient_norm2(omega)
    d_alpha = nu * alpha * ops.gradient_norm2(dyw)
    d_beta = lam * base
    d_tau = k**2 * ops.gradient_norm2(phi)
    d_tau_alpha = alpha * k**2 * (k**2 * g.norm2(dyphi) + g.norm2(d2phi))
    return EnergyBreakdown(float(e), d_gamma, d_alpha, d_beta, d_tau,
                           d_tau_alpha, k, nu)


class NormKind(enum.Enum):
    PLANE_WITH_LINFTY = "plane_with_linfty"
    CHANNEL_SOBOLEV_ONLY = "channel_sobolev_only"


@dataclass(frozen=True)
class ThresholdSpec:
    """Initial-size threshold epsilon(nu) = delta nu^{1/2}/(1+ln(1/nu)^{1/2})."""

    delta: float
    norm_kind: NormKind

    def epsilon(self, nu: float) -> float:
        return threshold_epsilon(nu, self.delta, kind=None)


def threshold_epsilon(nu: float, delta: float,
                      kind: DomainKind | None = None) -> float:
    """The smallness threshold delta nu^{1/2} / (1 + ln(1/nu)^{1/2})."""
    if not (0.0 < nu < 1.0):
        raise ValueError(f"nu must lie in (0,1), got {nu}")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    return delta * math.sqrt(nu) / (1.0 + math.sqrt(math.log(1.0 / nu)))


@dataclass(frozen=True)
class GlobalEnergyReport:
    """Snapshot of the global energy and its time-integrated dissipations."""

    E1: float
    E2: float
    D1: float
    D2: float
    D_star: dict
    time: float

    @property
    def E_total(self) -> float:
        return self.E1 + self.E2

    @property
    def D_total(self) -> float:
        return self.D1 + self.D2


def _mode_weight(kind: DomainKind, nu: float, k: float,
                 coeffs: HypoCoefficients, t: float) -> float:
    """Time weight on mode k: <c lam t>^{2J}/M_k on the plane family,
    e^{2 c lam t} on the channel."""
    lam = eval_lambda(kind, nu, k)
    if kind is DomainKind.CHANNEL:
        return math.exp(2.0 * coeffs.c * lam * t)
    u = coeffs.c * lam * t
    return (1.0 + u**2) ** coeffs.J / ghost_multiplier(nu, k, coeffs.c,
                                                       coeffs.J, t)


@dataclass
class GlobalSample:
    """Instantaneous integrands feeding the time accumulators."""

    t: float
    E1: float
    E2: float
    d1_rate: float
    d2_rate_per_mode: np.ndarray
    d_star_rates: dict


def sample_global(field, coeffs: HypoCoefficients,
                  kind: DomainKind | None = None) -> GlobalSample:
    """Evaluate the instantaneous global energies and dissipation densities.

    The field exposes nonzero_modes() (mode states with k != 0), dk (ladder
    spacing) and t.  The k-integral is a Riemann sum over the ladder; the
    sup over k is a max over represented modes.
    """
    if kind is None:
        kind = field.spec.kind
    nu = field.spec.nu
    t = field.t
    channel = kind is DomainKind.CHANNEL
    E1 = 0.0
    E2 = -math.inf
    d1 = 0.0
    d2_modes = []
    d_star = {name: 0.0 for name in DISSIPATION_COMPONENTS}
    # fields storing only k >= 0 under conjugate symmetry count each
    # positive-k bin twice (E_k = E_{-k} for real fields)
    sym = 2.0 if getattr(field, "conjugate_symmetric", False) else 1.0
    for state in field.nonzero_modes():
        k = state.k
        bd = mode_energy(state, coeffs, kind)
        wt = _mode_weight(kind, nu, k, coeffs, t)
        sob = (1.0 + k**2) ** coeffs.m
        mass = sym * field.dk if k > 0.0 or sym == 1.0 else field.dk
        E1 += wt * sob * bd.E_k * mass
        d1 += wt * sob * bd.D_total(coeffs) * mass
        for name, val in bd.components().items():
            d_star[name] += wt * sob * val * mass
        if not channel:
            g = state.grid
            e2 = g.norm2(state.omega)
            if coeffs.c_tau > 0.0:
                e2 += coeffs.c_tau * np.real(
                    g.inner(state.ops.apply_jk(state.omega), state.omega))
            E2 = max(E2, e2)
            d2_modes.append(bd.D_gamma + coeffs.c_tau * bd.D_tau)
    if channel or not np.isfinite(E2):
        E2 = 0.0
    return GlobalSample(t, E1, E2, d1, np.asarray(d2_modes), d_star)


class DissipationAccumulators:
    """Trapezoid-rule running integrals of the dissipation densities.

    D2's sup over k is taken over per-mode running integrals, so the order
    of sup and time integral matches the definition.
    """

    def __init__(self):
        self._prev: GlobalSample | None = None
        self.D1 = 0.0
        self.D2_per_mode: np.ndarray | None = None
        self.D_star = {name: 0.0 for name in DISSIPATION_COMPONENTS}

    def push(self, sample: GlobalSample):
        prev = self._prev
        if prev is not None:
            dt = sample.t - prev.t
            if dt < 0:
                raise ValueError("samples must arrive in time order")
            self.D1 += 0.5 * dt * (prev.d1_rate + sample.d1_rate)
            if sample.d2_rate_per_mode.size:
                if self.D2_per_mode is None:
                    self.D2_per_mode = np.zeros_like(sample.d2_rate_per_mode)
                self.D2_per_mode += 0.5 * dt * (prev.d2_rate_per_mode
                                                + sample.d2_rate_per_mode)
            for name in self.D_star:
                self.D_star[name] += 0.5 * dt * (prev.d_star_rates[name]
                                                 + sample.d_star_rates[name])
        self._prev = sample

    @property
    def D2(self) -> float:
        if self.D2_per_mode is None or self.D2_per_mode.size == 0:
            return 0.0
        return float(np.max(self.D2_per_mode))

    @property
    def primed(self) -> bool:
        return self._prev is not None


def global_energy(field, coeffs: HypoCoefficients,
                  kind: DomainKind | None = None,
                  t: float | None = None) -> GlobalEnergyReport:
    """Assemble the global energy report from a field and its accumulators."""
    acc = getattr(field, "accumulators", None)
    if acc is None:
        raise ValueError("field has no attached dissipation accumulators")
    sample = sample_global(field, coeffs, kind)
    if t is not None and abs(sample.t - t) > 1e-12:
        raise ValueError(f"field time {sample.t} != requested time {t}")
    return GlobalEnergyReport(E1=sample.E1, E2=sample.E2, D1=acc.D1,
                              D2=acc.D2, D_star=dict(acc.D_star),
                              time=sample.t)
