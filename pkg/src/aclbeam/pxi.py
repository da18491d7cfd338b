"""Discrete Neumann resolvent ``P = (I - xi d^2/dx^2)^{-1}``.

The auxiliary field ``eta = P z`` is approximated in the full P1 space on the
beam mesh.  Neumann conditions are natural, so the system matrix
``M_N + xi K_N`` is tridiagonal SPD and is held as a banded Cholesky factor.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh

from .elements import Mesh, gram, p1, p1_matrices


def _upper_band(A: np.ndarray) -> np.ndarray:
    ab = np.zeros((2, A.shape[0]))
    ab[0, 1:] = np.diagonal(A, 1)
    ab[1, :] = np.diagonal(A)
    return ab


class PxiDiscrete:
    """Factorized resolvent on the nodes of ``mesh``.

    Immutable after construction; ``apply``/``solve`` may be called
    concurrently.
    """

    def __init__(self, mesh: Mesh, xi: float):
        if not xi >= 0:
            raise ValueError("xi must be nonnegative")
        self.mesh = mesh
        self.xi = float(xi)
        self.M_N, self.K_N = p1_matrices(mesh)
        self.system = self.M_N + self.xi * self.K_N
        self._factor = cholesky_banded(_upper_band(self.system))

    @property
    def n(self) -> int:
        return self.mesh.n_elem

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(M_N + xi K_N) eta = rhs`` (rhs may be a matrix)."""
        return cho_solve_banded((self._factor, False), rhs)

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Nodal values of ``P z`` for a nodal P1 function ``z``."""
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.n + 1:
            raise ValueError(f"grid function has {z.shape[0]} values, mesh has {self.n + 1} nodes")
        return self.solve(self.M_N @ z)

    def mixed(self, clamped: bool = True) -> np.ndarray:
        """Mixed matrix ``G[a, j] = int psi_a (phi_j)_x dx``.

        Columns are the P1 DOFs of an axial field, without the x=0 node when
        ``clamped``.
        """
        n = self.n + 1
        G = np.zeros((n, n))
        for e in range(self.mesh.n_elem):
            s, _, w, h = self.mesh.quadrature(e)
            val, der = p1(s, h)
            G[np.ix_([e, e + 1], [e, e + 1])] += gram(val, w, der)
        return G[:, 1:] if clamped else G

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of the discrete resolvent, decreasing; all in (0, 1]."""
        lam = eigh(self.K_N, self.M_N, eigvals_only=True)
        lam = np.clip(lam, 0.0, None)
        return 1.0 / (1.0 + self.xi * lam)


def apply_pxi(z: np.ndarray, xi: float, L: float = 1.0) -> np.ndarray:
    """Apply the resolvent to nodal values ``z`` on a uniform grid over [0, L]."""
    z = np.asarray(z, dtype=float)
    return PxiDiscrete(Mesh.uniform(L, z.shape[0] - 1), xi).apply(z)


def pxi_spectrum(xi: float, n: int, L: float = 1.0) -> np.ndarray:
    if n < 2:
        raise ValueError("n must be >= 2")
    return PxiDiscrete(Mesh.uniform(L, n), xi).spectrum()


def galerkin_pxi_stiffness(mesh: Mesh, xi: float, weight: float,
                           clamped: bool = True) -> np.ndarray:
    """Symmetric PSD matrix of ``weight * int (P u_x) v_x dx`` on a P1 field.

    Equals ``weight * G^T (M_N + xi K_N)^{-1} G``; zero when ``weight == 0``.
    """
    if not weight >= 0:
        raise ValueError("weight must be nonnegative")
    size = mesh.n_elem if clamped else mesh.n_elem + 1
    if weight == 0:
        return np.zeros((size, size))
    op = PxiDiscrete(mesh, xi)
    G = op.mixed(clamped)
    S = weight * (G.T @ op.solve(G))
    return 0.5 * (S + S.T)
