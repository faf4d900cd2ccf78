"""Command-line orchestration of the verification suites.

Subcommands run one experiment each, write CSV/JSON artifacts into the
output directory (every file carries a config-hash/version header) and exit
0 exactly when all asserted criteria pass.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Experiment, RunConfig, load_config, parse_config
from .diagnostics import Regime, regime_scan
from .domains import DomainKind, DomainSpec, build_grid
from .energy import threshold_epsilon
from .linear import (ModeState, beta_identity_defects, default_dt,
                     gaussian_mode, run_decay_certificate, step_linear_beta)
from .multipliers import JK_NORM_BOUND, validate_coefficients
from .nonlinear import run_bootstrap_experiment
from .operators import (estimate_operator_norm, fast_commutator_operator,
                        fast_jk_operator, mode_operators)

JK_BOUND_PLANE = JK_NORM_BOUND + 0.01
JK_BOUND_BOUNDED = 2.0
COMM_BOUND = 4.0
BETA_IDENTITY_TOL = 1e-8


def _write_csv(path: Path, config: RunConfig, header: list, rows: list):
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config={config.config_hash} version={__version__}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(
            format(v, ".12g") if isinstance(v, float) else str(v)
            for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, config: RunConfig, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["config_hash"] = config.config_hash
    payload["version"] = __version__
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _default_k_grid() -> list:
    """Three wavenumbers per decade over k in [1e-3, 1e3]."""
    return [float(f"{k:.6g}") for k in np.logspace(-3.0, 3.0, 19)]


def run_verify_operators(config: RunConfig) -> int:
    spec = config.domain
    grid = build_grid(spec, config.resolution)
    ks = config.k_values or _default_k_grid()
    on_plane = spec.kind in (DomainKind.PLANE, DomainKind.BETA_PLANE)
    jk_bound = JK_BOUND_PLANE if on_plane else JK_BOUND_BOUNDED
    length = 2.0 * spec.y_extent if spec.kind is DomainKind.CHANNEL \
        else spec.y_extent
    rows = []
    all_ok = True
    for k in ks:
        if on_plane:
            ops = mode_operators(spec, grid, k)
            jk = estimate_operator_norm(ops.jk_operator(), grid,
                                        seed=config.seed).value
            ok = bool(jk <= jk_bound)
            comm_ratio = 0.0
        else:
            # keep |k| h <= 1/16 so the kernel's boundary layer (width
            # 1/|k|) stays resolved at every wavenumber
            n = max(config.resolution,
                    int(math.ceil(16.0 * abs(k) * length)) + 1)
            n += 1 - n % 2
            g = grid if n == config.resolution else build_grid(spec, n)
            jk = estimate_operator_norm(fast_jk_operator(spec, g, k), g,
                                        seed=config.seed).value
            comm = estimate_operator_norm(
                fast_commutator_operator(spec, g, k), g,
                seed=config.seed).value
            comm_ratio = comm / abs(k)
            ok = bool(jk <= jk_bound) and bool(comm_ratio <= COMM_BOUND)
        all_ok = all_ok and ok
        rows.append((k, jk, comm_ratio, ok))
    _write_csv(config.output_dir / "operator_norms.csv", config,
               ["k", "jk_norm", "comm_norm_over_k", "pass"], rows)
    _write_json(config.output_dir / "operator_norms.json", config, {
        "experiment": config.experiment.value,
        "jk_bound": jk_bound,
        "commutator_bound": COMM_BOUND,
        "all_bounds_satisfied": all_ok,
    })
    status = "all bounds satisfied" if all_ok else "BOUND VIOLATED"
    print(f"verify-operators [{spec.kind.value}]: {status} "
          f"({len(rows)} wavenumbers)")
    return 0 if all_ok else 1


def _certificate_k_values(nu: float, k_values: list) -> list:
    if k_values:
        return k_values
    return [0.05 * nu, 0.2 * nu, 0.8 * nu, 1.5 * nu, 5.0 * nu, 1.0]


def run_certify_linear(config: RunConfig) -> int:
    spec = config.domain
    report = validate_coefficients(config.coefficients)
    rows = []
    all_ok = True
    from .multipliers import eval_lambda
    for k in _certificate_k_values(spec.nu, config.k_values):
        state = gaussian_mode(spec, config.resolution, k)
        lam = eval_lambda(spec.kind, spec.nu, k)
        horizon = config.horizon or 2.0 / lam
        cert = run_decay_certificate(state, config.coefficients, horizon)
        all_ok = all_ok and cert.verdict
        rows.append((spec.nu, k, cert.pointwise_margin,
                     cert.integrated_margin, cert.verdict))
    _write_csv(config.output_dir / "linear_certificates.csv", config,
               ["nu", "k", "pointwise_margin", "integrated_margin", "pass"],
               rows)
    _write_json(config.output_dir / "linear_certificates.json", config, {
        "experiment": config.experiment.value,
        "c0": report.c0, "c1": report.c1, "c": config.coefficients.c,
        "all_pass": all_ok,
    })
    print(f"certify-linear [{spec.kind.value}, nu={spec.nu}]: "
          f"{'all margins >= 0' if all_ok else 'CERTIFICATE FAILED'}")
    return 0 if all_ok else 1


def run_scan_regimes(config: RunConfig) -> int:
    kind = config.domain.kind
    verdicts = []
    if kind is DomainKind.CHANNEL:
        verdicts.append(regime_scan(kind, [3e-3, 1e-2, 3e-2],
                                    k_ratios=[0.01, 0.025, 0.063, 0.1, 0.25]))
    else:
        verdicts.append(regime_scan(DomainKind.PLANE, [1e-4, 3e-4, 1e-3],
                                    k_list=[0.05, 0.1, 0.25, 0.5, 1.0]))
        verdicts.append(regime_scan(DomainKind.PLANE, [3e-3, 1e-2, 3e-2],
                                    k_ratios=[0.01, 0.025, 0.063, 0.1, 0.25]))
    rows = []
    payload = {"experiment": config.experiment.value, "verdicts": []}
    all_ok = True
    for v in verdicts:
        all_ok = all_ok and v.passed
        payload["verdicts"].append({
            "regime": v.regime.value,
            "slope_vs_k": v.slope_vs_k, "slope_vs_nu": v.slope_vs_nu,
            "expected_k": v.expected[0], "expected_nu": v.expected[1],
            "pass": v.passed,
        })
        for nu, k, rate in v.rates:
            expected = {
                Regime.ENHANCED_DISSIPATION: nu ** (1 / 3) * k ** (2 / 3),
                Regime.TAYLOR_DISPERSION: k**2 / nu,
                Regime.CHANNEL_HEAT_RATE: nu,
            }[v.regime]
            rows.append((v.regime.value, k, nu, rate, expected))
    payload["all_pass"] = all_ok
    _write_csv(config.output_dir / "regime_rates.csv", config,
               ["regime", "k", "nu", "fitted_rate", "expected_rate"], rows)
    _write_json(config.output_dir / "regime_verdicts.json", config, payload)
    print(f"scan-regimes: {'slopes in tolerance' if all_ok else 'SLOPE OUT OF TOLERANCE'}")
    return 0 if all_ok else 1


def run_beta_identities(config: RunConfig) -> int:
    base = config.domain
    if base.kind is not DomainKind.BETA_PLANE:
        spec = DomainSpec(DomainKind.BETA_PLANE, base.nu, coriolis_b=1.0,
                          y_extent=base.y_extent)
    else:
        spec = base
    ks = config.k_values or [0.1, 1.0, 4.0]
    rows = []
    all_ok = True
    for k in ks:
        state = gaussian_mode(spec, config.resolution, k)
        horizon = config.horizon or 10.0
        dt = default_dt(state, horizon)
        n = max(2, int(math.ceil(horizon / dt)))
        dt = horizon / n
        worst = {}
        for _ in range(n + 1):
            defects = beta_identity_defects(state)
            for name, val in defects.items():
                worst[name] = max(worst.get(name, 0.0), val)
            state = step_linear_beta(state, spec.coriolis_b, dt)
        ok = all(v <= BETA_IDENTITY_TOL for v in worst.values())
        all_ok = all_ok and ok
        for name, val in sorted(worst.items()):
            rows.append((k, name, val, val <= BETA_IDENTITY_TOL))

        plane = DomainSpec(DomainKind.PLANE, spec.nu, y_extent=spec.y_extent)
        cert_b = run_decay_certificate(
            gaussian_mode(spec, config.resolution, k),
            config.coefficients, horizon)
        cert_p = run_decay_certificate(
            gaussian_mode(plane, config.resolution, k),
            config.coefficients, horizon)
        if cert_b.verdict != cert_p.verdict:
            all_ok = False
        rows.append((k, "certificate_matches_plane", 0.0,
                     cert_b.verdict == cert_p.verdict))
    _write_csv(config.output_dir / "beta_identities.csv", config,
               ["k", "identity", "max_defect", "pass"], rows)
    _write_json(config.output_dir / "beta_identities.json", config, {
        "experiment": config.experiment.value,
        "tolerance": BETA_IDENTITY_TOL, "all_pass": all_ok,
    })
    print(f"beta-identities: {'all cancellations hold' if all_ok else 'IDENTITY VIOLATED'}")
    return 0 if all_ok else 1


def run_bootstrap(config: RunConfig) -> int:
    spec = config.domain
    monitor = run_bootstrap_experiment(
        spec, config.amplitude_ratio, horizon=config.horizon,
        resolution=(config.x_resolution, config.resolution),
        coeffs=config.coefficients, seed=config.seed,
        sample_every=4)
    rows = list(zip(monitor.times, monitor.E_series, monitor.D_series))
    _write_csv(config.output_dir / "bootstrap_series.csv", config,
               ["t", "E", "D"], rows)
    asserted = config.amplitude_ratio <= 1.0
    ok = (monitor.threshold_ok and monitor.bootstrap_ok) or not asserted
    _write_json(config.output_dir / "bootstrap_verdict.json", config, {
        "experiment": config.experiment.value,
        "E0": monitor.E0,
        "epsilon": threshold_epsilon(spec.nu, 1.0),
        "amplitude_ratio": config.amplitude_ratio,
        "threshold_ok": monitor.threshold_ok,
        "bootstrap_ok": monitor.bootstrap_ok,
        "first_violation": monitor.first_violation,
        "resolution_flag": monitor.resolution_flag,
        "asserted": asserted,
    })
    status = "bounded below threshold" if ok else "THRESHOLD VIOLATED"
    if not asserted:
        status = "recorded (no assertion above threshold)"
    print(f"bootstrap [{spec.kind.value}, nu={spec.nu}, "
          f"ratio={config.amplitude_ratio}]: {status}")
    return 0 if ok else 1


_RUNNERS = {
    Experiment.VERIFY_OPERATORS: run_verify_operators,
    Experiment.LINEAR_CERTIFICATE: run_certify_linear,
    Experiment.REGIME_SCAN: run_scan_regimes,
    Experiment.BETA_PLANE_IDENTITIES: run_beta_identities,
    Experiment.NONLINEAR_BOOTSTRAP: run_bootstrap,
}


def run(config: RunConfig) -> int:
    """Execute the configured experiment; returns the process exit status."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[config.experiment](config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="couette",
        description="Verification suites for shear-flow stability numerics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for exp in Experiment:
        p = sub.add_parser(exp.value)
        p.add_argument("--config", type=Path, default=None,
                       help="YAML run configuration")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (overrides config)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--nu", type=float, default=None)
        p.add_argument("--domain", type=str, default=None,
                       choices=[d.value for d in DomainKind])
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--horizon", type=float, default=None)
        p.add_argument("--amplitude-ratio", type=float, default=None)
    return parser


def main(argv: list | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "experiment": args.command,
        "output_dir": str(args.out) if args.out else None,
        "workers": args.workers,
        "resolution": args.resolution,
        "nu": args.nu,
        "kind": args.domain,
        "seed": args.seed,
        "horizon": args.horizon,
        "amplitude_ratio": args.amplitude_ratio,
    }
    try:
        if args.config is not None:
            config = load_config(args.config, overrides)
        else:
            config = parse_config({"experiment": args.command}, overrides)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
