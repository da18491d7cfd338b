from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import newton

from aclbeam.dynamics import EnergyTrace
from aclbeam.fem import OperatorBundle, assemble
from aclbeam.model import default_config
from aclbeam.spectral import (ModelComparison, SpectrumError, compare_models, compute_spectrum,
                              decay_rate_fit, observability_report, pencil_eigenvalues)

from conftest import decoupled_config


def damped_wave_roots(count, s=0.5):
    """Complex roots of cosh(l) + s sinh(l) with Im > 0, by Newton from the asymptotic guess."""
    f = lambda l: np.cosh(l) + s * np.sinh(l)
    fp = lambda l: np.sinh(l) + s * np.cosh(l)
    re = 0.5 * np.log((1 - s) / (1 + s))
    return np.array([newton(f, complex(re + 0.1, (k - 0.5) * np.pi + 0.1), fprime=fp, tol=1e-14)
                     for k in range(1, count + 1)])


def test_oracle_roots_are_closed_form():
    roots = damped_wave_roots(5)
    assert np.allclose(roots.real, 0.5 * np.log(1 / 3), rtol=0, atol=1e-12)
    assert np.allclose(roots.imag, (np.arange(1, 6) - 0.5) * np.pi, rtol=0, atol=1e-12)


def test_damped_wave_spectrum():
    rep = compute_spectrum(assemble(decoupled_config(s1=0.5), 80))
    lam = rep.eigenvalues[rep.eigenvalues.real < -0.1][:5]
    exact = damped_wave_roots(5)
    assert np.allclose(lam.real, exact.real, rtol=0.02)
    assert np.allclose(lam.imag, exact.imag, rtol=0.01)


def test_pencil_is_conjugate_closed(cfg):
    lam = pencil_eigenvalues(assemble(cfg, 10))
    a = np.sort_complex(lam)
    b = np.sort_complex(np.conj(lam))
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_eigenpairs_satisfy_pencil(cfg):
    b = assemble(cfg, 12)
    rep = compute_spectrum(b, 10, keep_vectors=True)
    for k, lam in enumerate(rep.eigenvalues):
        q = rep.vectors[:, k]
        r = (lam**2 * b.M + lam * b.D + b.K) @ q
        scale = abs(lam) ** 2 * np.linalg.norm(b.M) + abs(lam) * np.linalg.norm(b.D) + np.linalg.norm(b.K)
        assert np.linalg.norm(r) < 1e-9 * scale * np.linalg.norm(q)
        assert np.real(q.conj() @ b.K @ q) == pytest.approx(1.0, rel=1e-10)


def test_report_fields(cfg):
    rep = compute_spectrum(assemble(cfg, 12), 10)
    assert rep.eigenvalues.shape == (10,) and np.all(rep.eigenvalues.imag >= 0)
    assert np.all(np.diff(np.abs(rep.eigenvalues.imag)) >= 0)
    assert rep.traces.shape == (10, 4)
    assert np.allclose(rep.block_fractions.sum(axis=1), 1.0)
    assert rep.trusted.all()
    assert rep.summary()["modes"] == 10


def test_mode_count_bounds(cfg):
    b = assemble(cfg, 4)
    with pytest.raises(ValueError, match="mode count"):
        compute_spectrum(b, b.ndof + 1)
    with pytest.raises(ValueError):
        compute_spectrum(b, 0)


def test_indefinite_stiffness_reported(cfg):
    b = assemble(cfg, 4)
    with pytest.raises(SpectrumError, match="stiffness"):
        compute_spectrum(OperatorBundle(b.M, -b.K, b.D, b.layout, b.mesh))


def test_random_psd_boundary_damping_is_dissipative(cfg0):
    b = assemble(cfg0, 10)
    tips = list(b.layout.boundary_dofs)
    rng = np.random.default_rng(5)
    for _ in range(10):
        R = rng.normal(size=(4, 4))
        D = np.zeros_like(b.K)
        D[np.ix_(tips, tips)] = R @ R.T
        lam = pencil_eigenvalues(b.with_damping(D))
        assert lam.real.max() < 1e-9 * np.abs(lam).max()


def test_scaling_invariance(cfg):
    b = assemble(cfg, 10)
    lam = compute_spectrum(b, 12).eigenvalues
    assert np.allclose(compute_spectrum(b.scaled(7.5), 12).eigenvalues, lam, rtol=1e-9)


def test_unit_energy_wave_traces():
    # conservative decoupled axial modes sin(beta x) carry tip trace sqrt(2)/beta
    # (a heavier piezo layer separates its axial frequencies from the host ones)
    cfg = decoupled_config(s1=0.0)
    cfg = replace(cfg, piezo=replace(cfg.piezo, rho=4.0))
    obs = compute_spectrum(assemble(cfg, 80), 30)
    host = obs.block_fractions[:, 0] > 0.999
    beta = obs.frequencies[host][:3]
    assert np.allclose(beta, (np.arange(1, 4) - 0.5) * np.pi, rtol=1e-3)
    assert np.allclose(obs.trace_norms[host][:3], np.sqrt(2) / beta, rtol=1e-3)


def test_observability_ignores_gains(cfg, cfg0):
    a = observability_report(assemble(cfg, 20), 10)
    b = observability_report(assemble(cfg0, 20), 10)
    assert np.allclose(a.trace_norms, b.trace_norms)
    assert a.min_trace_norm > 1e-3


def test_charge_raises_frequencies(cfg):
    cmp = compare_models(cfg, 20)
    assert np.all(cmp.shift >= -1e-12 * cmp.omega_voltage)
    assert cmp.axial.size > 0
    assert cmp.shift[cmp.axial[0]] > 0


def test_zero_coupling_gives_identical_models(cfg):
    cmp = compare_models(replace(cfg, piezo=replace(cfg.piezo, gamma=0.0)), 20)
    assert np.all(cmp.shift == 0.0)


def test_comparison_csv(tmp_path):
    cmp = ModelComparison(np.array([1.0, 2.5]), np.array([1.0, 2.0]), np.array([0.1, 0.9]),
                          np.array([True, True]))
    cmp.write_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "mode,omega_voltage,omega_charge,shift,axial_fraction"
    assert len(lines) == 2 and lines[1].startswith("2,2,2.5,0.5,")


def test_decay_fit_recovers_rate():
    t = np.linspace(0, 10, 201)
    trace = EnergyTrace(t, 5 * np.exp(-2 * t), np.zeros((t.size, 0)), np.zeros(t.size), ())
    fit = decay_rate_fit(trace, (2.0, 8.0))
    assert fit.rate == pytest.approx(2.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.samples == 121
    with pytest.raises(ValueError, match="samples"):
        decay_rate_fit(trace, (2.0, 2.1))


def test_abscissa_negative_with_feedback(cfg):
    rep = compute_spectrum(assemble(cfg, 20), 20)
    assert rep.spectral_abscissa < 0


def test_zero_gain_abscissa_vanishes():
    rep = compute_spectrum(assemble(default_config().with_gains(s1=0, s3=0, k1=0, k2=0), 20))
    trusted = rep.eigenvalues[rep.trusted]
    assert np.abs(trusted.real).max() < 1e-8
