"""Closed-loop spectra, boundary observability and decay-rate fitting.

The quadratic pencil ``lambda^2 M + lambda D + K`` is linearized in energy
coordinates ``a = L_K^T q``, ``b = L_M^T q'`` (``K = L_K L_K^T``,
``M = L_M L_M^T``), where the generator reads

    [[0, C], [-C^T, -D~]],   C = L_K^T L_M^{-T},   D~ = L_M^{-1} D L_M^{-T}.

It is skew-symmetric when D = 0 and well balanced otherwise, so a dense
``eig`` resolves real parts to roughly machine precision times the largest
frequency.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cholesky, eig, solve_triangular

from .dynamics import EnergyTrace
from .fem import OperatorBundle, actuation_pair
from .model import BeamConfig, FeedbackGains

TRUSTED_FRACTION = 2.0 / 3.0
AXIAL_THRESHOLD = 0.5


class SpectrumError(RuntimeError):
    pass


@dataclass
class SpectrumReport:
    """Lowest closed-loop modes of a bundle.

    ``eigenvalues`` holds one representative per conjugate pair (Im >= 0),
    sorted by |Im|.  Eigenvectors are scaled to unit potential energy
    ``q^H K q = 1``; ``traces`` are the moduli of the tip DOFs
    (axial fields..., w(L), w_x(L)) of that vector.  ``block_fractions``
    splits the kinetic energy ``q^H M q`` over the axial fields and w.
    """

    eigenvalues: np.ndarray
    traces: np.ndarray
    block_fractions: np.ndarray
    trusted: np.ndarray
    n_elem: int
    resolved: int
    vectors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def spectral_abscissa(self) -> float:
        return spectral_abscissa(self)

    @property
    def trace_norms(self) -> np.ndarray:
        return np.linalg.norm(self.traces, axis=1)

    @property
    def axial_fraction(self) -> np.ndarray:
        """Kinetic-energy share of the outermost (piezoelectric) axial field."""
        return self.block_fractions[:, -2]

    @property
    def frequencies(self) -> np.ndarray:
        return self.eigenvalues.imag

    def conjugate_closed(self) -> np.ndarray:
        lam = self.eigenvalues
        return np.concatenate([lam, np.conj(lam[lam.imag > 0])])

    def write_csv(self, path: str | Path) -> None:
        names = ["re", "im", "trace_v1", "trace_v3", "trace_w", "trace_wx", "axial_fraction"]
        t = self.traces
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(names)
            for k, lam in enumerate(self.eigenvalues):
                row = (lam.real, lam.imag, t[k, 0], t[k, -3], t[k, -2], t[k, -1], self.axial_fraction[k])
                out.writerow([f"{x:.17g}" for x in row])

    def summary(self) -> dict:
        return {
            "spectral_abscissa": float(self.spectral_abscissa),
            "min_trace_norm": float(self.trace_norms.min()),
            "n_elem": self.n_elem,
            "modes": int(self.eigenvalues.size),
            **self.meta,
        }

    def write_summary(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def _cholesky(A: np.ndarray, name: str) -> np.ndarray:
    try:
        return cholesky(A, lower=True)
    except LinAlgError as exc:
        raise SpectrumError(f"{name} is not positive definite (cond ~ {np.linalg.cond(A):.3e})") from exc


def energy_generator(bundle: OperatorBundle) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Generator in energy coordinates plus the two Cholesky factors."""
    LK = _cholesky(bundle.K, "stiffness K")
    LM = _cholesky(bundle.M, "mass M")
    C = solve_triangular(LM, LK, lower=True).T
    Z = solve_triangular(LM, bundle.D, lower=True)
    Dt = solve_triangular(LM, Z.T, lower=True).T
    Dt = 0.5 * (Dt + Dt.T)
    n = bundle.ndof
    G = np.zeros((2 * n, 2 * n))
    G[:n, n:] = C
    G[n:, :n] = -C.T
    G[n:, n:] = -Dt
    return G, LK, LM


def pencil_eigenvalues(bundle: OperatorBundle) -> np.ndarray:
    """All 2N eigenvalues of the linearized pencil (unsorted)."""
    G, _, _ = energy_generator(bundle)
    return np.linalg.eigvals(G)


def compute_spectrum(bundle: OperatorBundle, count: int | None = None,
                     keep_vectors: bool = False) -> SpectrumReport:
    ndof = bundle.ndof
    if count is None:
        count = ndof
    if not 1 <= count <= ndof:
        raise ValueError(f"mode count {count} must lie in [1, {ndof}]")
    G, LK, LM = energy_generator(bundle)
    try:
        lam, Z = eig(G)
    except LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed (cond ~ {np.linalg.cond(G):.3e})") from exc

    upper = np.flatnonzero(lam.imag >= 0)
    order = upper[np.lexsort((lam.real[upper], np.abs(lam.imag[upper])))]
    resolved = order.size
    order = order[:count]
    lam = lam[order]
    a = Z[:ndof, order]
    a = a / np.linalg.norm(a, axis=0)
    q = solve_triangular(LK.T, a, lower=False)

    lay = bundle.layout
    traces = np.abs(q[list(lay.boundary_dofs), :]).T
    blocks = [lay.axial(i) for i in range(lay.n_axial)] + [lay.w]
    kin = np.array([np.einsum("ik,ij,jk->k", q[b].conj(), bundle.M[b, b], q[b]).real for b in blocks]).T
    fractions = kin / kin.sum(axis=1, keepdims=True)

    trusted = np.arange(count) < int(TRUSTED_FRACTION * ndof)
    meta = {}
    if bundle.config is not None:
        cfg = bundle.config
        if hasattr(cfg, "actuation"):
            meta["actuation"] = cfg.actuation.value
        meta["gains"] = _gains_dict(cfg)
    return SpectrumReport(lam, traces, fractions, trusted, bundle.mesh.n_elem, resolved,
                          q if keep_vectors else None, meta)


def _gains_dict(cfg) -> dict:
    g = cfg.gains
    if isinstance(g, FeedbackGains):
        return {"s1": g.s1, "s3": g.s3, "k1": g.k1, "k2": g.k2}
    return {"s": list(g.s), "k1": g.k1, "k2": g.k2}


def spectral_abscissa(report: SpectrumReport) -> float:
    if report.eigenvalues.size == 0:
        raise ValueError("empty spectrum report")
    return float(report.eigenvalues.real.max())


@dataclass
class ObservabilityReport:
    trace_norms: np.ndarray
    traces: np.ndarray
    frequencies: np.ndarray

    @property
    def min_trace_norm(self) -> float:
        return float(self.trace_norms.min())


def observability_report(bundle: OperatorBundle, count: int) -> ObservabilityReport:
    """Boundary visibility of the lowest conservative modes.

    The feedback is switched off first.  A mode with zero tip trace would be
    a nontrivial solution of the overdetermined eigenproblem; the headline
    ``min_trace_norm`` should stay away from zero.
    """
    conservative = bundle.with_damping(np.zeros_like(bundle.D))
    rep = compute_spectrum(conservative, count)
    return ObservabilityReport(rep.trace_norms, rep.traces, rep.frequencies)


# ------------------------------------------------------------ model compare

@dataclass
class ModelComparison:
    """Charge versus voltage frequencies, paired by sorted mode index."""

    omega_charge: np.ndarray
    omega_voltage: np.ndarray
    axial_fraction: np.ndarray
    trusted: np.ndarray
    threshold: float = AXIAL_THRESHOLD

    @property
    def shift(self) -> np.ndarray:
        return self.omega_charge - self.omega_voltage

    @property
    def relative_shift(self) -> np.ndarray:
        return self.shift / self.omega_voltage

    @property
    def axial(self) -> np.ndarray:
        return np.flatnonzero(self.axial_fraction >= self.threshold)

    @property
    def trusted_axial(self) -> np.ndarray:
        return self.axial[self.trusted[self.axial]]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["mode", "omega_voltage", "omega_charge", "shift", "axial_fraction"])
            for k in self.axial:
                out.writerow([str(k + 1)] + [f"{x:.17g}" for x in (
                    self.omega_voltage[k], self.omega_charge[k], self.shift[k], self.axial_fraction[k])])


def compare_models(config: BeamConfig, n_elem: int = 40, count: int | None = None,
                   threshold: float = AXIAL_THRESHOLD) -> ModelComparison:
    """Conservative charge vs voltage spectra on one mesh.

    Feedback gains are zeroed.  Since the charge-mode stiffness dominates the
    voltage-mode one as a quadratic form and the mass is shared, every sorted
    frequency can only move up.
    """
    config = config.with_gains(s1=0.0, s3=0.0, k1=0.0, k2=0.0)
    charge, voltage = actuation_pair(config, n_elem)
    rc = compute_spectrum(charge, count)
    rv = compute_spectrum(voltage, count)
    cmp = ModelComparison(rc.frequencies, rv.frequencies, rc.axial_fraction, rc.trusted, threshold)
    if cmp.axial.size == 0:
        raise SpectrumError(f"no mode has piezo axial energy fraction >= {threshold}")
    return cmp


# -------------------------------------------------------------- decay fit

@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    samples: int


def decay_rate_fit(trace: EnergyTrace, window: tuple[float, float]) -> DecayFit:
    """Least-squares slope of ln E(t) over ``window``, negated."""
    t_a, t_b = window
    sel = (trace.times >= t_a) & (trace.times <= t_b)
    t, E = trace.times[sel], trace.energy[sel]
    if t.size < 10:
        raise ValueError(f"only {t.size} samples in window {window}; need >= 10")
    if np.any(E <= 0):
        raise ValueError("energy must be positive inside the fit window")
    y = np.log(E)
    slope, intercept = np.polyfit(t, y, 1)
    ss_res = float(np.sum((y - (slope * t + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return DecayFit(-float(slope), r2, int(t.size))
