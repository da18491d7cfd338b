"""Mesh, shape functions and element quadrature.

Axial fields use continuous piecewise-linear (P1) elements, the transverse
displacement uses C1 Hermite cubics with (value, slope) nodal DOFs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# 4-point Gauss-Legendre on [0, 1]: exact up to degree 7, which covers every
# product of Hermite cubics used here.
_GX, _GW = np.polynomial.legendre.leggauss(4)
GAUSS_S = 0.5 * (_GX + 1.0)
GAUSS_W = 0.5 * _GW


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("mesh needs at least 2 elements")
        if nodes[0] != 0.0:
            raise ValueError("mesh must start at x=0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, L: float, n_elem: int) -> "Mesh":
        if n_elem < 2:
            raise ValueError("n_elem must be >= 2")
        return cls(np.linspace(0.0, L, n_elem + 1))

    @property
    def L(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_elem(self) -> int:
        return self.nodes.size - 1

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    def quadrature(self, e: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """(local coordinate s, physical x, weights, h) of element ``e``."""
        xa, xb = self.nodes[e], self.nodes[e + 1]
        h = xb - xa
        return GAUSS_S, xa + h * GAUSS_S, h * GAUSS_W, h


def p1(s: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """P1 values and x-derivatives, shape (2, len(s))."""
    s = np.asarray(s, dtype=float)
    val = np.vstack([1.0 - s, s])
    der = np.vstack([np.full_like(s, -1.0 / h), np.full_like(s, 1.0 / h)])
    return val, der


def hermite(s: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hermite cubic values, first and second x-derivatives, shape (4, len(s)).

    Local DOF order is (w_a, w_x,a, w_b, w_x,b).
    """
    s = np.asarray(s, dtype=float)
    s2, s3 = s * s, s * s * s
    val = np.vstack([
        1.0 - 3.0 * s2 + 2.0 * s3,
        h * (s - 2.0 * s2 + s3),
        3.0 * s2 - 2.0 * s3,
        h * (s3 - s2),
    ])
    d1 = np.vstack([
        (6.0 * s2 - 6.0 * s) / h,
        1.0 - 4.0 * s + 3.0 * s2,
        (6.0 * s - 6.0 * s2) / h,
        3.0 * s2 - 2.0 * s,
    ])
    d2 = np.vstack([
        (12.0 * s - 6.0) / h**2,
        (6.0 * s - 4.0) / h,
        (6.0 - 12.0 * s) / h**2,
        (6.0 * s - 2.0) / h,
    ])
    return val, d1, d2


def gram(rows: np.ndarray, weights: np.ndarray, cols: np.ndarray | None = None) -> np.ndarray:
    """Quadrature of rows_i(x) * cols_j(x)."""
    cols = rows if cols is None else cols
    return (rows * weights) @ cols.T


def p1_matrices(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Full (Neumann, unclamped) P1 mass and stiffness, size n+1."""
    n = mesh.n_elem + 1
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for e in range(mesh.n_elem):
        s, _, w, h = mesh.quadrature(e)
        val, der = p1(s, h)
        idx = np.ix_([e, e + 1], [e, e + 1])
        M[idx] += gram(val, w)
        K[idx] += gram(der, w)
    return M, K
