"""Physical description of a three-layer active constrained layer beam.

Layer 1 is the stiff elastic host, layer 2 the viscoelastic core (shear
only), layer 3 the piezoelectric constraining layer. All quantities are
treated as consistent nondimensional values; units are not enforced.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Actuation(str, Enum):
    CHARGE = "charge"
    VOLTAGE = "voltage"


@dataclass(frozen=True)
class Violation:
    path: str
    reason: str

    def __str__(self) -> str:
        return f"{self.path}: {self.reason}"


class ConfigError(ValueError):
    """Raised when a configuration breaks one or more invariants."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class LayerParams:
    """Material and geometric constants of one layer.

    Only the fields relevant to a layer's role are checked: ``alpha`` for
    the face layers, ``gamma``/``eps1``/``eps3`` for piezoelectric layers
    and ``G`` (shear modulus) for the core.
    """

    rho: float
    h: float
    alpha: float = 0.0
    gamma: float = 0.0
    eps1: float = 1.0
    eps3: float = 1.0
    G: float = 0.0


@dataclass(frozen=True)
class FeedbackGains:
    s1: float = 0.0
    s3: float = 0.0
    k1: float = 0.0
    k2: float = 0.0

    @property
    def conservative(self) -> bool:
        return self.s1 == self.s3 == self.k1 == self.k2 == 0.0


@dataclass(frozen=True)
class DerivedConstants:
    m: float
    K1: float
    K2: float
    H: float
    xi: float
    pxi_weight: float
    charge_gain_scale: float


def derive_constants(
    stiff: LayerParams,
    core: LayerParams,
    piezo: LayerParams,
    actuation: Actuation | str = Actuation.CHARGE,
) -> DerivedConstants:
    """Closed-form constants of the reduced sandwich model.

    In voltage mode the nonlocal stiffness weight is zero and the charge
    feedback acts on the axial tip velocity with unit scale.
    """
    actuation = Actuation(actuation)
    violations = []
    for name, layer, keys in (
        ("layer.stiff", stiff, ("rho", "h", "alpha")),
        ("layer.core", core, ("h",)),
        ("layer.piezo", piezo, ("rho", "h", "alpha", "eps1", "eps3")),
    ):
        for key in keys:
            if not getattr(layer, key) > 0:
                violations.append(Violation(f"{name}.{key}", "must be positive"))
    if violations:
        raise ConfigError(violations)

    h1, h2, h3 = stiff.h, core.h, piezo.h
    if actuation is Actuation.CHARGE:
        pxi_weight = piezo.gamma**2 * h3 / piezo.eps3
        charge_gain_scale = piezo.gamma / piezo.eps3
    else:
        pxi_weight = 0.0
        charge_gain_scale = 1.0
    return DerivedConstants(
        m=stiff.rho * h1 + piezo.rho * h3,
        K1=(stiff.rho * h1**3 + piezo.rho * h3**3) / 12.0,
        K2=(stiff.alpha * h1**3 + piezo.alpha * h3**3) / 12.0,
        H=(h1 + 2.0 * h2 + h3) / 2.0,
        xi=piezo.eps1 * h3**2 / (12.0 * piezo.eps3),
        pxi_weight=pxi_weight,
        charge_gain_scale=charge_gain_scale,
    )


@dataclass(frozen=True)
class BeamConfig:
    L: float
    stiff: LayerParams
    core: LayerParams
    piezo: LayerParams
    gains: FeedbackGains = field(default_factory=FeedbackGains)
    actuation: Actuation = Actuation.CHARGE

    @property
    def layers(self) -> tuple[LayerParams, LayerParams, LayerParams]:
        return (self.stiff, self.core, self.piezo)

    @property
    def derived(self) -> DerivedConstants:
        return derive_constants(self.stiff, self.core, self.piezo, self.actuation)

    def with_gains(self, **gains: float) -> "BeamConfig":
        return replace(self, gains=replace(self.gains, **gains))

    def with_actuation(self, actuation: Actuation | str) -> "BeamConfig":
        return replace(self, actuation=Actuation(actuation))

    def to_dict(self) -> dict[str, Any]:
        return {
            "length": self.L,
            "actuation": self.actuation.value,
            "layer": {
                "stiff": _layer_dict(self.stiff, STIFF_KEYS),
                "core": _layer_dict(self.core, CORE_KEYS),
                "piezo": _layer_dict(self.piezo, PIEZO_KEYS),
            },
            "gains": asdict(self.gains),
        }


STIFF_KEYS = ("rho", "h", "alpha")
CORE_KEYS = ("rho", "h", "G")
PIEZO_KEYS = ("rho", "h", "alpha", "gamma", "eps1", "eps3")
GAIN_KEYS = ("s1", "s3", "k1", "k2")


def _layer_dict(layer: LayerParams, keys: tuple[str, ...]) -> dict[str, float]:
    return {k: getattr(layer, k) for k in keys}


def default_config() -> BeamConfig:
    """O(1) nondimensional reference configuration."""
    return BeamConfig(
        L=1.0,
        stiff=LayerParams(rho=1.0, h=0.1, alpha=1.0),
        core=LayerParams(rho=1.0, h=0.05, G=1.0),
        piezo=LayerParams(rho=1.0, h=0.1, alpha=1.0, gamma=0.1, eps1=1.0, eps3=1.0),
        gains=FeedbackGains(0.5, 0.5, 0.5, 0.5),
        actuation=Actuation.CHARGE,
    )


def check(config: BeamConfig) -> list[Violation]:
    """Return every invariant violation of ``config`` (empty when valid)."""
    out: list[Violation] = []

    def positive(path: str, value: float, reason: str = "must be positive") -> None:
        if not value > 0:
            out.append(Violation(path, reason))

    def nonnegative(path: str, value: float, reason: str = "must be nonnegative") -> None:
        if not value >= 0:
            out.append(Violation(path, reason))

    positive("length", config.L, "beam length must be positive")
    for key in STIFF_KEYS:
        positive(f"layer.stiff.{key}", getattr(config.stiff, key))
    positive("layer.core.h", config.core.h, "core thickness must be positive")
    nonnegative("layer.core.rho", config.core.rho)
    nonnegative("layer.core.G", config.core.G, "shear modulus must be nonnegative")
    for key in ("rho", "h", "alpha", "eps1", "eps3"):
        positive(f"layer.piezo.{key}", getattr(config.piezo, key))
    nonnegative("layer.piezo.gamma", config.piezo.gamma)
    for key in GAIN_KEYS:
        nonnegative(f"gains.{key}", getattr(config.gains, key), "gains must be nonnegative")
    if not isinstance(config.actuation, Actuation):
        out.append(Violation("actuation", "must be 'charge' or 'voltage'"))
    return out


def validate(config: BeamConfig) -> BeamConfig:
    violations = check(config)
    if violations:
        raise ConfigError(violations)
    return config


def _take(table: Mapping[str, Any], path: str, allowed: tuple[str, ...],
          violations: list[Violation]) -> dict[str, float]:
    if not isinstance(table, Mapping):
        violations.append(Violation(path, "expected a table"))
        return {}
    out = {}
    for key, value in table.items():
        if key not in allowed:
            violations.append(Violation(f"{path}.{key}", "unknown key"))
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            violations.append(Violation(f"{path}.{key}", "must be a number"))
        else:
            out[key] = float(value)
    return out


def config_from_dict(data: Mapping[str, Any]) -> BeamConfig:
    """Build and validate a config from nested tables; unknown keys fail."""
    violations: list[Violation] = []
    base = default_config()
    for key in data:
        if key not in ("length", "actuation", "layer", "gains"):
            violations.append(Violation(key, "unknown key"))

    layer = data.get("layer", {})
    if not isinstance(layer, Mapping):
        violations.append(Violation("layer", "expected a table"))
        layer = {}
    for key in layer:
        if key not in ("stiff", "core", "piezo"):
            violations.append(Violation(f"layer.{key}", "unknown key"))

    stiff = replace(base.stiff, **_take(layer.get("stiff", {}), "layer.stiff", STIFF_KEYS, violations))
    core = replace(base.core, **_take(layer.get("core", {}), "layer.core", CORE_KEYS, violations))
    piezo = replace(base.piezo, **_take(layer.get("piezo", {}), "layer.piezo", PIEZO_KEYS, violations))
    gains = replace(base.gains, **_take(data.get("gains", {}), "gains", GAIN_KEYS, violations))

    length = data.get("length", base.L)
    if isinstance(length, bool) or not isinstance(length, (int, float)):
        violations.append(Violation("length", "must be a number"))
        length = base.L
    try:
        actuation = Actuation(data.get("actuation", base.actuation.value))
    except ValueError:
        violations.append(Violation("actuation", "must be 'charge' or 'voltage'"))
        actuation = base.actuation

    if violations:
        raise ConfigError(violations)
    return validate(BeamConfig(float(length), stiff, core, piezo, gains, actuation))


def load_toml(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([Violation(str(path), f"cannot read: {exc.strerror}")]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([Violation(str(path), f"malformed TOML: {exc}")]) from exc


def load_config(path: str | Path) -> BeamConfig:
    return config_from_dict(load_toml(path))
