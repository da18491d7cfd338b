"""Semi-discrete closed loop ``M q'' + D q' + K q = 0`` for the 3-layer beam.

Global DOF order is ``[axial_0 | axial_1 | ... | w]``; for the 3-layer beam
axial_0 is v1 (host) and axial_1 is v3 (piezo).  Axial blocks hold P1 nodal
values, the w block interleaves (w, w_x) per node.  Clamped DOFs at x=0 are
eliminated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .elements import Mesh, gram, hermite, p1, p1_matrices
from .model import Actuation, BeamConfig, validate
from .pxi import galerkin_pxi_stiffness


@dataclass(frozen=True)
class DofLayout:
    n_elem: int
    n_axial: int = 2
    clamped: bool = True

    @property
    def first_node(self) -> int:
        return 1 if self.clamped else 0

    @property
    def nodes_per_field(self) -> int:
        return self.n_elem + 1 - self.first_node

    @property
    def ndof(self) -> int:
        return (self.n_axial + 2) * self.nodes_per_field

    def axial(self, i: int) -> slice:
        k = self.nodes_per_field
        return slice(i * k, (i + 1) * k)

    @property
    def w(self) -> slice:
        k = self.nodes_per_field
        return slice(self.n_axial * k, self.ndof)

    @property
    def w_values(self) -> np.ndarray:
        return np.arange(self.w.start, self.ndof, 2)

    @property
    def w_slopes(self) -> np.ndarray:
        return np.arange(self.w.start + 1, self.ndof, 2)

    def axial_dof(self, i: int, node: int) -> int:
        """Global index of node ``node`` of axial field ``i`` (-1 if clamped)."""
        if node < self.first_node:
            return -1
        return i * self.nodes_per_field + node - self.first_node

    def w_dofs(self, node: int) -> tuple[int, int]:
        if node < self.first_node:
            return -1, -1
        base = self.w.start + 2 * (node - self.first_node)
        return base, base + 1

    def axial_tip(self, i: int) -> int:
        return self.axial_dof(i, self.n_elem)

    @property
    def w_tip(self) -> int:
        return self.w_dofs(self.n_elem)[0]

    @property
    def wx_tip(self) -> int:
        return self.w_dofs(self.n_elem)[1]

    @property
    def boundary_dofs(self) -> tuple[int, ...]:
        """Tip DOFs: every axial field, then w(L), w_x(L)."""
        return tuple(self.axial_tip(i) for i in range(self.n_axial)) + (self.w_tip, self.wx_tip)

    def expand(self, q: np.ndarray) -> dict[str, np.ndarray]:
        """Nodal fields including the clamped node (zeros there)."""
        q = np.asarray(q)
        pad = self.first_node
        out = {}
        for i in range(self.n_axial):
            out[f"axial{i}"] = np.concatenate([np.zeros(pad, q.dtype), q[self.axial(i)]])
        out["w"] = np.concatenate([np.zeros(pad, q.dtype), q[self.w_values]])
        out["wx"] = np.concatenate([np.zeros(pad, q.dtype), q[self.w_slopes]])
        return out


@dataclass(frozen=True)
class Channel:
    """One collocated boundary feedback: ``coeff * |q'[dof]|^2`` dissipation."""
    name: str
    dof: int
    coeff: float


@dataclass(frozen=True, eq=False)
class OperatorBundle:
    M: np.ndarray
    K: np.ndarray
    D: np.ndarray
    layout: DofLayout
    mesh: Mesh
    channels: tuple[Channel, ...] = ()
    config: Any = None
    meta: dict = field(default_factory=dict)

    @property
    def ndof(self) -> int:
        return self.M.shape[0]

    def scaled(self, c: float) -> "OperatorBundle":
        return OperatorBundle(c * self.M, c * self.K, c * self.D, self.layout, self.mesh,
                              tuple(Channel(ch.name, ch.dof, c * ch.coeff) for ch in self.channels),
                              self.config, dict(self.meta))

    def with_damping(self, D: np.ndarray, channels: tuple[Channel, ...] = ()) -> "OperatorBundle":
        return OperatorBundle(self.M, self.K, np.asarray(D, dtype=float), self.layout,
                              self.mesh, channels, self.config, dict(self.meta))

    def dump(self, directory: str | Path) -> None:
        """Write M, K, D as dense CSV with a ``# rows cols`` header."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in ("M", "K", "D"):
            A = getattr(self, name)
            np.savetxt(directory / f"{name}.csv", A, delimiter=",", fmt="%.17g",
                       header=f"{A.shape[0]} {A.shape[1]}", comments="# ")


# ---------------------------------------------------------------- blocks

def p1_blocks(mesh: Mesh, clamped: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted P1 mass and stiffness of one axial field."""
    M, K = p1_matrices(mesh)
    if clamped:
        return M[1:, 1:], K[1:, 1:]
    return M, K


def hermite_blocks(mesh: Mesh, clamped: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unweighted Hermite mass, slope Gram and bending stiffness of w."""
    n = 2 * (mesh.n_elem + 1)
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    B = np.zeros((n, n))
    for e in range(mesh.n_elem):
        s, _, w, h = mesh.quadrature(e)
        val, d1, d2 = hermite(s, h)
        idx = np.ix_(range(2 * e, 2 * e + 4), range(2 * e, 2 * e + 4))
        M[idx] += gram(val, w)
        S[idx] += gram(d1, w)
        B[idx] += gram(d2, w)
    if clamped:
        return M[2:, 2:], S[2:, 2:], B[2:, 2:]
    return M, S, B


def shear_gram(mesh: Mesh, layout: DofLayout, axial_coeffs: Sequence[float],
               slope_coeff: float, weight: float) -> np.ndarray:
    """Gram matrix of ``weight * |sum_i c_i y_i + c_w w_x|^2`` integrated over the beam."""
    K = np.zeros((layout.ndof, layout.ndof))
    if weight == 0:
        return K
    for e in range(mesh.n_elem):
        s, _, w, h = mesh.quadrature(e)
        val, _ = p1(s, h)
        _, d1, _ = hermite(s, h)
        rows, dofs = [], []
        for i, c in enumerate(axial_coeffs):
            rows.append(c * val)
            dofs += [layout.axial_dof(i, e), layout.axial_dof(i, e + 1)]
        rows.append(slope_coeff * d1)
        dofs += [*layout.w_dofs(e), *layout.w_dofs(e + 1)]
        local = weight * gram(np.vstack(rows), w)
        dofs = np.asarray(dofs)
        keep = dofs >= 0
        K[np.ix_(dofs[keep], dofs[keep])] += local[np.ix_(keep, keep)]
    return K


# -------------------------------------------------------------- assembly

def assemble_mass(config: BeamConfig, mesh: Mesh, clamped: bool = True) -> np.ndarray:
    d = config.derived
    lay = DofLayout(mesh.n_elem, 2, clamped)
    Mp, _ = p1_blocks(mesh, clamped)
    Mh, Sh, _ = hermite_blocks(mesh, clamped)
    M = np.zeros((lay.ndof, lay.ndof))
    M[lay.axial(0), lay.axial(0)] = config.stiff.rho * config.stiff.h * Mp
    M[lay.axial(1), lay.axial(1)] = config.piezo.rho * config.piezo.h * Mp
    M[lay.w, lay.w] = d.m * Mh + d.K1 * Sh
    return 0.5 * (M + M.T)


def assemble_stiffness(config: BeamConfig, mesh: Mesh, clamped: bool = True) -> np.ndarray:
    d = config.derived
    lay = DofLayout(mesh.n_elem, 2, clamped)
    _, Kp = p1_blocks(mesh, clamped)
    _, _, Bh = hermite_blocks(mesh, clamped)
    K = np.zeros((lay.ndof, lay.ndof))
    K[lay.axial(0), lay.axial(0)] = config.stiff.alpha * config.stiff.h * Kp
    K[lay.axial(1), lay.axial(1)] = (config.piezo.alpha * config.piezo.h * Kp
                                     + galerkin_pxi_stiffness(mesh, d.xi, d.pxi_weight, clamped))
    K[lay.w, lay.w] = d.K2 * Bh
    # G2 h2 |phi2|^2 with phi2 = (-v1 + v3 + H w_x) / h2
    h2 = config.core.h
    K += shear_gram(mesh, lay, (-1.0 / h2, 1.0 / h2), d.H / h2, config.core.G * h2)
    return 0.5 * (K + K.T)


def damping_channels(config: BeamConfig, layout: DofLayout) -> tuple[Channel, ...]:
    g = config.gains
    scale = config.derived.charge_gain_scale
    return (
        Channel("s1", layout.axial_tip(0), g.s1),
        Channel("s3", layout.axial_tip(1), scale * g.s3),
        Channel("k1", layout.wx_tip, g.k1),
        Channel("k2", layout.w_tip, g.k2),
    )


def damping_from_channels(channels: Sequence[Channel], ndof: int) -> np.ndarray:
    D = np.zeros((ndof, ndof))
    for ch in channels:
        D[ch.dof, ch.dof] += ch.coeff
    return D


def assemble_damping(config: BeamConfig, mesh: Mesh) -> np.ndarray:
    lay = DofLayout(mesh.n_elem)
    return damping_from_channels(damping_channels(config, lay), lay.ndof)


def assemble(config: BeamConfig, mesh: Mesh | int) -> OperatorBundle:
    """Mass, stiffness and boundary damping of the clamped-free beam."""
    config = validate(config)
    if not isinstance(mesh, Mesh):
        mesh = Mesh.uniform(config.L, int(mesh))
    if not np.isclose(mesh.L, config.L, rtol=1e-12, atol=0):
        raise ValueError(f"mesh length {mesh.L} does not match beam length {config.L}")
    lay = DofLayout(mesh.n_elem)
    channels = damping_channels(config, lay)
    return OperatorBundle(
        M=assemble_mass(config, mesh),
        K=assemble_stiffness(config, mesh),
        D=damping_from_channels(channels, lay.ndof),
        layout=lay,
        mesh=mesh,
        channels=channels,
        config=config,
        meta={"kind": "three-layer", "actuation": config.actuation.value},
    )


def actuation_pair(config: BeamConfig, mesh: Mesh | int) -> tuple[OperatorBundle, OperatorBundle]:
    """(charge, voltage) bundles of the same beam on the same mesh."""
    return (assemble(config.with_actuation(Actuation.CHARGE), mesh),
            assemble(config.with_actuation(Actuation.VOLTAGE), mesh))
