"""Decay-rate readout and regime-scaling verdicts.

Rates are read from energy-type series (squared norms), so fitted e-folding
exponents are twice the amplitude rate.  The regime scan measures a rate per
(nu, k) run with a regime-appropriate probe: e-fold crossing time in the
fast mixing band |k| >= nu, the instantaneous log-derivative at the momentum
relaxation time 1/nu for the slow band on the plane (where the late-time
decay is governed by a different, faster law), and a late-window exponential
fit on the channel.  Scaling slopes come from a joint log-log regression
over the (nu, k) grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .domains import DomainKind, DomainSpec, build_grid
from .linear import ModeState, step_linear
from .multipliers import eval_lambda


class RateModel(enum.Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL_ORDER_J = "polynomial_order_j"


@dataclass(frozen=True)
class RateFit:
    """Fitted e-folding exponent of an energy series over a time window."""

    rate: float
    window: tuple
    residual: float
    model: RateModel


def fit_decay_rate(times, values, model: RateModel = RateModel.EXPONENTIAL,
                   scale: float = 1.0,
                   transient_fraction: float = 0.1) -> RateFit:
    """Least-squares fit of log(value) against t (EXPONENTIAL) or against
    log sqrt(1 + (scale t)^2) (POLYNOMIAL_ORDER_J).

    The first transient_fraction of the horizon is excluded.  rate is the
    decay exponent (positive for decaying series); residual is the RMS
    misfit of the log series.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size != v.size or t.size < 10:
        raise ValueError("need at least 10 (t, value) samples")
    if np.any(v <= 0.0):
        raise ValueError("rate fitting requires positive values")
    t0, t1 = t[0], t[-1]
    if not t1 > t0:
        raise ValueError("degenerate time window")
    keep = t >= t0 + transient_fraction * (t1 - t0)
    tw, vw = t[keep], v[keep]
    if tw.size < 2 or tw[-1] <= tw[0]:
        raise ValueError("window degenerate after transient exclusion")
    if model is RateModel.EXPONENTIAL:
        x = tw
    elif model is RateModel.POLYNOMIAL_ORDER_J:
        x = 0.5 * np.log1p((scale * tw) ** 2)
    else:
        raise ValueError(f"unknown model {model!r}")
    logv = np.log(vw)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, logv, rcond=None)
    resid = logv - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return RateFit(rate=float(-coef[0]), window=(float(tw[0]), float(tw[-1])),
                   residual=rms, model=model)


class Regime(enum.Enum):
    ENHANCED_DISSIPATION = "enhanced_dissipation"
    TAYLOR_DISPERSION = "taylor_dispersion"
    CHANNEL_HEAT_RATE = "channel_heat_rate"


EXPECTED_SLOPES = {
    Regime.ENHANCED_DISSIPATION: (2.0 / 3.0, 1.0 / 3.0),
    Regime.TAYLOR_DISPERSION: (2.0, -1.0),
    Regime.CHANNEL_HEAT_RATE: (0.0, 1.0),
}

SLOPE_TOL = 0.1


@dataclass(frozen=True)
class ScalingVerdict:
    regime: Regime
    slope_vs_k: float
    slope_vs_nu: float
    expected: tuple
    tolerance: float
    rates: list

    @property
    def passed(self) -> bool:
        ek, en = self.expected
        return (abs(self.slope_vs_k - ek) <= self.tolerance
                and abs(self.slope_vs_nu - en) <= self.tolerance)


def _classify(nu: float, k: float) -> str:
    if k >= nu:
        return "high"
    if k <= nu / 4.0:
        return "low"
    return "mixed"


def _norm2_series(state: ModeState, horizon: float, dt: float):
    """Integrate one mode and return (times, ||omega||^2) samples."""
    n = max(2, int(math.ceil(horizon / dt)))
    dt = horizon / n
    t = np.empty(n + 1)
    e = np.empty(n + 1)
    s = state
    for i in range(n + 1):
        t[i] = s.t
        e[i] = s.grid.norm2(s.omega)
        if i < n:
            s = step_linear(s, dt)
    return t, e


def _gaussian_state(spec: DomainSpec, resolution: int, k: float,
                    width: float) -> ModeState:
    grid = build_grid(spec, resolution)
    y = grid.nodes
    if spec.kind is DomainKind.CHANNEL:
        w = np.sin(np.pi * (y + 1.0) / 2.0)
    else:
        w = np.exp(-((y / width) ** 2))
    return ModeState(spec, grid, k, w.astype(complex), 0.0)


def _rate_high_k(nu: float, k: float, resolution: int) -> RateFit:
    """e-fold crossing rate in the fast band: time for the squared norm to
    drop by e^2, read off a dense series."""
    spec = DomainSpec(DomainKind.PLANE, nu)
    state = _gaussian_state(spec, resolution, k, width=2.0)
    lam = eval_lambda(DomainKind.PLANE, nu, k)
    horizon = 8.0 / lam
    dt = min(0.5 / (k * spec.y_extent), 0.25 / lam)
    t, e = _norm2_series(state, horizon, dt)
    target = e[0] * math.exp(-2.0)
    below = np.nonzero(e <= target)[0]
    if below.size == 0:
        raise ValueError("series never crossed the e-fold target; "
                         "extend the horizon")
    i = below[0]
    # linear interpolation of log e between the bracketing samples
    f = (math.log(target) - math.log(e[i - 1])) \
        / (math.log(e[i]) - math.log(e[i - 1]))
    t_cross = t[i - 1] + f * (t[i] - t[i - 1])
    return RateFit(rate=2.0 / t_cross, window=(0.0, float(t_cross)),
                   residual=0.0, model=RateModel.EXPONENTIAL)


def _rate_low_k_plane(nu: float, k: float, resolution: int) -> RateFit:
    """Instantaneous log-derivative of the squared norm at t = 1/nu.

    The probe profile is wide (width 10 nu / k) so its y-frequency content
    sits well inside the slow band and plain heat decay stays subdominant;
    the domain half-width scales with the profile.
    """
    width = 10.0 * nu / k
    spec = DomainSpec(DomainKind.PLANE, nu, y_extent=6.0 * width)
    state = _gaussian_state(spec, resolution, k, width)
    t_star = 1.0 / nu
    dt = min(0.5 / (k * spec.y_extent), 0.02 * t_star)
    n = max(2, int(round(t_star / dt)))
    dt = t_star / n
    s = state
    for _ in range(n - 1):
        s = step_linear(s, dt)
    e = [s.grid.norm2(s.omega)]
    for _ in range(2):
        s = step_linear(s, dt)
        e.append(s.grid.norm2(s.omega))
    rate = (math.log(e[0]) - math.log(e[2])) / (2.0 * dt)
    return RateFit(rate=rate, window=(t_star - dt, t_star + dt),
                   residual=0.0, model=RateModel.EXPONENTIAL)


def _rate_channel(nu: float, k: float, resolution: int) -> RateFit:
    """Late-window exponential fit on the channel (clean spectral gap)."""
    spec = DomainSpec(DomainKind.CHANNEL, nu)
    state = _gaussian_state(spec, resolution, k, width=1.0)
    rate_guess = 2.0 * nu * ((math.pi / 2.0) ** 2 + k**2)
    horizon = 4.0 / rate_guess
    dt = horizon / 60.0
    t, e = _norm2_series(state, horizon, dt)
    return fit_decay_rate(t, e, RateModel.EXPONENTIAL, transient_fraction=0.25)


def regime_scan(kind: DomainKind, nu_list, k_ratios=None, k_list=None,
                regime: Regime | None = None,
                resolution: int | None = None) -> ScalingVerdict:
    """Measure decay rates over a (nu, k) grid and regress the scaling slopes.

    Either k_list (absolute wavenumbers, shared across nu) or k_ratios
    (k = ratio * nu per run, keeping every run inside the slow band) must be
    given.  All runs must fall in a single band: |k| >= nu or |k| <= nu/4;
    mixed grids are rejected.  Slopes (d log rate / d log k, d log rate /
    d log nu) are fitted jointly by least squares.
    """
    nu_list = list(nu_list)
    if len(nu_list) < 2 or max(nu_list) / min(nu_list) < 10.0 - 1e-9:
        raise ValueError("nu_list must span at least a decade")
    if (k_list is None) == (k_ratios is None):
        raise ValueError("give exactly one of k_list or k_ratios")
    pairs = []
    for nu in nu_list:
        ks = list(k_list) if k_list is not None \
            else [r * nu for r in k_ratios]
        pairs.extend((nu, k) for k in ks)
    kk = [k for _, k in pairs]
    if max(kk) / min(kk) < 10.0 - 1e-9:
        raise ValueError("the k values must span at least a decade")
    bands = {_classify(nu, k) for nu, k in pairs}
    if len(bands) != 1 or "mixed" in bands:
        raise ValueError(f"mixed-regime grid rejected: bands {sorted(bands)}")
    band = bands.pop()
    if regime is None:
        if kind is DomainKind.CHANNEL:
            regime = Regime.CHANNEL_HEAT_RATE
        elif band == "high":
            regime = Regime.ENHANCED_DISSIPATION
        else:
            regime = Regime.TAYLOR_DISPERSION
    if regime is Regime.CHANNEL_HEAT_RATE and kind is not DomainKind.CHANNEL:
        raise ValueError("the heat-rate regime lives on the channel")

    rows = []
    for nu, k in pairs:
        if kind is DomainKind.CHANNEL:
            fit = _rate_channel(nu, k, resolution or 129)
        elif band == "high":
            fit = _rate_high_k(nu, k, resolution or 512)
        else:
            fit = _rate_low_k_plane(nu, k, resolution or 4096)
        rows.append((nu, k, fit.rate))

    A = np.column_stack([np.log([k for _, k, _ in rows]),
                         np.log([nu for nu, _, _ in rows]),
                         np.ones(len(rows))])
    b = np.log([r for _, _, r in rows])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return ScalingVerdict(regime=regime, slope_vs_k=float(coef[0]),
                          slope_vs_nu=float(coef[1]),
                          expected=EXPECTED_SLOPES[regime],
                          tolerance=SLOPE_TOL, rates=rows)
