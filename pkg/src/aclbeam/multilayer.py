"""2m+1 layer ACL beam: m+1 piezoelectric/elastic odd layers, m shear cores.

Odd layer i carries its own axial field y_i, nonlocal piezo stiffness and
tip charge feedback; all layers share the transverse displacement w.  The
shear angle of core j is ``phi_j = (B y)_j / h_E,j + N_j w_x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .elements import Mesh
from .fem import (Channel, DofLayout, OperatorBundle, damping_from_channels, hermite_blocks,
                  p1_blocks, shear_gram)
from .model import (Actuation, BeamConfig, ConfigError, LayerParams, Violation, load_toml)
from .pxi import galerkin_pxi_stiffness

ODD_KEYS = ("rho", "h", "alpha", "gamma", "eps1", "eps3")
EVEN_KEYS = ("rho", "h", "G")


@dataclass(frozen=True)
class MultilayerGains:
    s: tuple[float, ...]
    k1: float = 0.0
    k2: float = 0.0


@dataclass(frozen=True)
class MultilayerConfig:
    L: float
    odd_layers: tuple[LayerParams, ...]
    even_layers: tuple[LayerParams, ...]
    gains: MultilayerGains = None

    def __post_init__(self):
        object.__setattr__(self, "odd_layers", tuple(self.odd_layers))
        object.__setattr__(self, "even_layers", tuple(self.even_layers))
        if self.gains is None:
            object.__setattr__(self, "gains", MultilayerGains((0.0,) * len(self.odd_layers)))

    @property
    def m(self) -> int:
        return len(self.even_layers)

    @property
    def mass(self) -> float:
        return sum(l.rho * l.h for l in self.odd_layers)

    @property
    def K1(self) -> float:
        return sum(l.rho * l.h**3 for l in self.odd_layers) / 12.0

    @property
    def K2(self) -> float:
        return sum(l.alpha * l.h**3 for l in self.odd_layers) / 12.0

    def xi(self, i: int) -> float:
        l = self.odd_layers[i]
        return l.eps1 * l.h**2 / (12.0 * l.eps3)

    def pxi_weight(self, i: int) -> float:
        l = self.odd_layers[i]
        return l.gamma**2 * l.h / l.eps3

    def charge_scale(self, i: int) -> float:
        """Tip feedback scale: gamma/eps3 for piezo layers, 1 for purely elastic ones."""
        l = self.odd_layers[i]
        return l.gamma / l.eps3 if l.gamma > 0 else 1.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "length": self.L,
            "layer": {
                "odd": [{k: getattr(l, k) for k in ODD_KEYS} for l in self.odd_layers],
                "even": [{k: getattr(l, k) for k in EVEN_KEYS} for l in self.even_layers],
            },
            "gains": {"s": list(self.gains.s), "k1": self.gains.k1, "k2": self.gains.k2},
        }


def check_multilayer(config: MultilayerConfig) -> list[Violation]:
    out = []
    m = config.m
    if m < 1:
        out.append(Violation("layer.even", "need at least one core layer"))
    if len(config.odd_layers) != m + 1:
        out.append(Violation("layer.odd", f"need {m + 1} odd layers for {m} core layers"))
    if len(config.gains.s) != len(config.odd_layers):
        out.append(Violation("gains.s", "need one charge gain per odd layer"))
    if not config.L > 0:
        out.append(Violation("length", "beam length must be positive"))
    for i, l in enumerate(config.odd_layers):
        for key in ("rho", "h", "alpha", "eps1", "eps3"):
            if not getattr(l, key) > 0:
                out.append(Violation(f"layer.odd[{i}].{key}", "must be positive"))
        if not l.gamma >= 0:
            out.append(Violation(f"layer.odd[{i}].gamma", "must be nonnegative"))
    for j, l in enumerate(config.even_layers):
        if not l.h > 0:
            out.append(Violation(f"layer.even[{j}].h", "core thickness must be positive"))
        if not l.G >= 0:
            out.append(Violation(f"layer.even[{j}].G", "shear modulus must be nonnegative"))
    gains = [*config.gains.s, config.gains.k1, config.gains.k2]
    if any(not g >= 0 for g in gains):
        out.append(Violation("gains", "gains must be nonnegative"))
    return out


def validate_multilayer(config: MultilayerConfig) -> MultilayerConfig:
    violations = check_multilayer(config)
    if violations:
        raise ConfigError(violations)
    return config


def build_incidence(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Averaging matrix A, difference matrix B (both m x (m+1)) and ones vectors."""
    if m < 1:
        raise ValueError("m must be >= 1")
    A = np.zeros((m, m + 1))
    B = np.zeros((m, m + 1))
    # 1-based formula b_ij = (-1)^(i+j+1) on j in {i, i+1}
    for i in range(1, m + 1):
        for j in (i, i + 1):
            A[i - 1, j - 1] = 0.5
            B[i - 1, j - 1] = (-1.0) ** (i + j + 1)
    return A, B, np.ones(m + 1), np.ones(m)


def shear_vector_N(config: MultilayerConfig) -> np.ndarray:
    A, _, ones_O, ones_E = build_incidence(config.m)
    h_O = np.array([l.h for l in config.odd_layers])
    h_E = np.array([l.h for l in config.even_layers])
    return (A @ (h_O * ones_O)) / h_E + ones_E


def from_three_layer(config: BeamConfig) -> MultilayerConfig:
    """The m=1 multilayer description of a charge-actuated 3-layer beam."""
    if config.actuation is not Actuation.CHARGE:
        raise ValueError("multilayer beams are charge actuated")
    stiff = LayerParams(config.stiff.rho, config.stiff.h, config.stiff.alpha, gamma=0.0)
    g = config.gains
    return MultilayerConfig(config.L, (stiff, config.piezo), (config.core,),
                            MultilayerGains((g.s1, g.s3), g.k1, g.k2))


def assemble_multilayer(config: MultilayerConfig, mesh: Mesh | int) -> OperatorBundle:
    config = validate_multilayer(config)
    if not isinstance(mesh, Mesh):
        mesh = Mesh.uniform(config.L, int(mesh))
    m = config.m
    lay = DofLayout(mesh.n_elem, m + 1, True)
    Mp, Kp = p1_blocks(mesh)
    Mh, Sh, Bh = hermite_blocks(mesh)

    M = np.zeros((lay.ndof, lay.ndof))
    K = np.zeros((lay.ndof, lay.ndof))
    for i, l in enumerate(config.odd_layers):
        b = lay.axial(i)
        M[b, b] = l.rho * l.h * Mp
        K[b, b] = l.alpha * l.h * Kp + galerkin_pxi_stiffness(mesh, config.xi(i), config.pxi_weight(i))
    M[lay.w, lay.w] = config.mass * Mh + config.K1 * Sh
    K[lay.w, lay.w] = config.K2 * Bh

    _, B, _, _ = build_incidence(m)
    N = shear_vector_N(config)
    for j, core in enumerate(config.even_layers):
        K += shear_gram(mesh, lay, B[j] / core.h, N[j], core.G * core.h)
    M, K = 0.5 * (M + M.T), 0.5 * (K + K.T)

    channels = tuple(Channel(f"s{2 * i + 1}", lay.axial_tip(i), config.charge_scale(i) * s)
                     for i, s in enumerate(config.gains.s))
    channels += (Channel("k1", lay.wx_tip, config.gains.k1), Channel("k2", lay.w_tip, config.gains.k2))
    return OperatorBundle(M, K, damping_from_channels(channels, lay.ndof), lay, mesh, channels,
                          config, {"kind": "multilayer", "m": m})


# ------------------------------------------------------------------ config io

def _layer(table: Any, path: str, keys: Sequence[str], violations: list[Violation],
           defaults: Mapping[str, float]) -> LayerParams:
    if not isinstance(table, Mapping):
        violations.append(Violation(path, "expected a table"))
        return LayerParams(**defaults)
    values = dict(defaults)
    for k, v in table.items():
        if k not in keys:
            violations.append(Violation(f"{path}.{k}", "unknown key"))
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            violations.append(Violation(f"{path}.{k}", "must be a number"))
        else:
            values[k] = float(v)
    return LayerParams(**values)


def multilayer_from_dict(data: Mapping[str, Any]) -> MultilayerConfig:
    """Parse ``layer.odd[]``, ``layer.even[]``, ``gains.s[]``, ``gains.k1/k2``."""
    violations: list[Violation] = []
    for key in data:
        if key not in ("length", "actuation", "layer", "gains"):
            violations.append(Violation(key, "unknown key"))
    if data.get("actuation", "charge") != "charge":
        violations.append(Violation("actuation", "multilayer beams are charge actuated"))
    layer = data.get("layer", {})
    if not isinstance(layer, Mapping):
        raise ConfigError([Violation("layer", "expected a table")])
    for key in layer:
        if key not in ("odd", "even"):
            violations.append(Violation(f"layer.{key}", "unknown key"))
    odd_defaults = {"rho": 1.0, "h": 0.1, "alpha": 1.0, "gamma": 0.0, "eps1": 1.0, "eps3": 1.0}
    even_defaults = {"rho": 1.0, "h": 0.05, "G": 1.0}
    odd = [_layer(t, f"layer.odd[{i}]", ODD_KEYS, violations, odd_defaults)
           for i, t in enumerate(layer.get("odd", []))]
    even = [_layer(t, f"layer.even[{i}]", EVEN_KEYS, violations, even_defaults)
            for i, t in enumerate(layer.get("even", []))]

    gains = data.get("gains", {})
    s, k1, k2 = [0.0] * len(odd), 0.0, 0.0
    if not isinstance(gains, Mapping):
        violations.append(Violation("gains", "expected a table"))
    else:
        for key, value in gains.items():
            if key == "s":
                if not isinstance(value, list) or any(
                        isinstance(x, bool) or not isinstance(x, (int, float)) for x in value):
                    violations.append(Violation("gains.s", "must be a list of numbers"))
                else:
                    s = [float(x) for x in value]
            elif key in ("k1", "k2"):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    violations.append(Violation(f"gains.{key}", "must be a number"))
                elif key == "k1":
                    k1 = float(value)
                else:
                    k2 = float(value)
            else:
                violations.append(Violation(f"gains.{key}", "unknown key"))
    length = data.get("length", 1.0)
    if isinstance(length, bool) or not isinstance(length, (int, float)):
        violations.append(Violation("length", "must be a number"))
        length = 1.0
    if violations:
        raise ConfigError(violations)
    return validate_multilayer(MultilayerConfig(float(length), tuple(odd), tuple(even),
                                                MultilayerGains(tuple(s), k1, k2)))


def load_multilayer(path) -> MultilayerConfig:
    return multilayer_from_dict(load_toml(path))


def example_multilayer(m: int, gains: float = 0.5) -> MultilayerConfig:
    """Default-like stack: piezo odd layers as the 3-layer piezo, cores as its core."""
    odd = LayerParams(rho=1.0, h=0.1, alpha=1.0, gamma=0.1, eps1=1.0, eps3=1.0)
    even = LayerParams(rho=1.0, h=0.05, G=1.0)
    return MultilayerConfig(1.0, (odd,) * (m + 1), (even,) * m,
                            MultilayerGains((gains,) * (m + 1), gains, gains))
