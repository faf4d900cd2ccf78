"""Run configuration: a YAML file with CLI-flag overrides.

A config names the experiment, the domain, numerical settings and an output
directory.  Flags given on the command line take precedence over file
fields; defaults fill the rest.  The raw canonical form of the resolved
config is hashed so every artifact can state exactly what produced it.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .domains import DEFAULT_Y_EXTENT, DomainKind, DomainSpec
from .multipliers import HypoCoefficients, calibrated_coefficients


class Experiment(enum.Enum):
    VERIFY_OPERATORS = "verify-operators"
    LINEAR_CERTIFICATE = "certify-linear"
    REGIME_SCAN = "scan-regimes"
    BETA_PLANE_IDENTITIES = "beta-identities"
    NONLINEAR_BOOTSTRAP = "bootstrap"


class ConfigError(ValueError):
    """Malformed configuration, with the offending field named."""


@dataclass
class RunConfig:
    experiment: Experiment
    domain: DomainSpec
    coefficients: HypoCoefficients
    resolution: int = 0
    x_resolution: int = 64
    horizon: float | None = None
    output_dir: Path = Path("out")
    seed: int = 0
    workers: int = 1
    k_values: list = field(default_factory=list)
    amplitude_ratio: float = 0.5
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        # output_dir and workers affect where and how fast results are
        # written, not what is computed, so they do not enter the hash
        canon = json.dumps(
            {k: v for k, v in self.raw.items()
             if k not in ("output_dir", "workers")},
            sort_keys=True, default=str)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


_DEFAULT_RESOLUTION = {
    DomainKind.PLANE: 512,
    DomainKind.BETA_PLANE: 512,
    DomainKind.HALF_PLANE: 513,
    DomainKind.CHANNEL: 129,
}


def _require(cond: bool, field_name: str, message: str):
    if not cond:
        raise ConfigError(f"config field '{field_name}': {message}")


def parse_config(data: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a parsed mapping plus override fields."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    merged = dict(data)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("nu", "kind", "coriolis_b", "y_extent"):
            merged.setdefault("domain", {})
            if not isinstance(merged["domain"], dict):
                raise ConfigError("config field 'domain': must be a mapping")
            merged["domain"] = dict(merged["domain"])
            merged["domain"][key] = val
        else:
            merged[key] = val

    _require("experiment" in merged, "experiment", "missing")
    try:
        experiment = Experiment(str(merged["experiment"]))
    except ValueError:
        names = ", ".join(e.value for e in Experiment)
        raise ConfigError(
            f"config field 'experiment': unknown value "
            f"{merged['experiment']!r} (expected one of: {names})") from None

    dom = merged.get("domain", {})
    _require(isinstance(dom, dict), "domain", "must be a mapping")
    kind_name = dom.get("kind", "plane")
    try:
        kind = DomainKind(str(kind_name))
    except ValueError:
        names = ", ".join(d.value for d in DomainKind)
        raise ConfigError(
            f"config field 'domain.kind': unknown value {kind_name!r} "
            f"(expected one of: {names})") from None
    nu = dom.get("nu", 0.01)
    _require(isinstance(nu, (int, float)), "domain.nu", "must be a number")
    kwargs = {"coriolis_b": float(dom.get("coriolis_b", 0.0))}
    if kind is DomainKind.BETA_PLANE and kwargs["coriolis_b"] == 0.0:
        kwargs["coriolis_b"] = 1.0
    if "y_extent" in dom:
        kwargs["y_extent"] = float(dom["y_extent"])
    elif kind is not DomainKind.CHANNEL:
        kwargs["y_extent"] = DEFAULT_Y_EXTENT
    try:
        spec = DomainSpec(kind, float(nu), **kwargs)
    except ValueError as exc:
        raise ConfigError(f"config field 'domain': {exc}") from None

    co = merged.get("coefficients")
    if co is None:
        coeffs = calibrated_coefficients(kind)
    else:
        _require(isinstance(co, dict), "coefficients", "must be a mapping")
        try:
            coeffs = HypoCoefficients(**{k: float(v) for k, v in co.items()})
        except TypeError as exc:
            raise ConfigError(f"config field 'coefficients': {exc}") from None

    resolution = int(merged.get("resolution") or _DEFAULT_RESOLUTION[kind])
    _require(resolution >= 8, "resolution", "must be >= 8")
    horizon = merged.get("horizon")
    if horizon is not None:
        horizon = float(horizon)
        _require(horizon > 0.0, "horizon", "must be positive")
    k_values = merged.get("k_values", [])
    _require(isinstance(k_values, list), "k_values", "must be a list")
    seed = int(merged.get("seed", 0))
    workers = int(merged.get("workers", 1))
    _require(workers >= 1, "workers", "must be >= 1")
    amplitude_ratio = float(merged.get("amplitude_ratio", 0.5))
    _require(0.0 <= amplitude_ratio <= 4.0, "amplitude_ratio",
             "must lie in [0, 4]")

    return RunConfig(experiment=experiment, domain=spec, coefficients=coeffs,
                     resolution=resolution,
                     x_resolution=int(merged.get("x_resolution", 64)),
                     horizon=horizon,
                     output_dir=Path(merged.get("output_dir", "out")),
                     seed=seed, workers=workers,
                     k_values=[float(k) for k in k_values],
                     amplitude_ratio=amplitude_ratio, raw=merged)


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Parse a YAML config file; parse errors carry the source location."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" \
            if mark else ""
        raise ConfigError(f"cannot parse {path}{where}: {exc}") from None
    if data is None:
        data = {}
    return parse_config(data, overrides)
