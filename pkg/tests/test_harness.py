import dataclasses
import math

import numpy as np
import pytest

from supercell.assembly import assemble_exact, assemble_interpolated
from supercell.harness import (ConvergenceRecord, ExtendedEigenfunction, LineGrid, StudyConfig, StudyError, align, compute_gap,
                               extend, fit_rate, line_error, paper_scale, real_gauge, reference_grid,
                               run_quadrature_study, run_size_study, size_rates)
from supercell.planewave import FourierVector, LatticeSpec, PlanewaveBasis, synthesize_at
from supercell.potentials import CutoffChi, abs_sin_potential, exp_defect
from supercell.spectra import eigh


def random_real(rng, L, n):
    basis = PlanewaveBasis(LatticeSpec(), L, n)
    c = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    c = 0.5 * (c + c[::-1].conj())
    return FourierVector(basis, c / np.linalg.norm(c))


@pytest.fixture(scope="module")
def gap():
    return compute_gap(StudyConfig())


@pytest.fixture(scope="module")
def size_result(gap):
    cfg = StudyConfig(L_list=(6, 8, 10, 12, 14), N_list=(10,), reference=(20, 200))
    return run_size_study(cfg, gap)


@pytest.fixture(scope="module")
def quad_result(gap):
    cfg = StudyConfig(L_list=(6,), quadrature_N_list=(2, 4, 6), M_list=(56, 112, 224, 448), reference=(6, 36))
    return run_quadrature_study(cfg, gap)


# --- config -------------------------------------------------------------------

@pytest.mark.parametrize("change", [
    dict(L_list=()),
    dict(L_list=(6, 30)),
    dict(N_list=(0,)),
    dict(M_list=(-56,)),
    dict(grid_h=0.0),
    dict(baseline="best"),
    dict(transform="slow"),
    dict(vper="cosine"),
    dict(reference=(20,)),
    dict(workers=0),
    dict(margin=-1.0),
])
def test_config_validation(change):
    with pytest.raises(ValueError):
        dataclasses.replace(StudyConfig(), **change)


def test_paper_scale():
    cfg = paper_scale(StudyConfig())
    assert cfg.reference == (40, 1400) and max(cfg.L_list) == 18
    assert cfg.M_list == (56, 112, 224, 448)


# --- extension to the line -------------------------------------------------------

def test_extend_constant_mode():
    L = 3
    basis = PlanewaveBasis(LatticeSpec(), L, 4)
    u = FourierVector.mode(basis, 0, math.sqrt(basis.volume))  # u ≡ 1
    grid = reference_grid(8, math.pi / 32)
    phi = extend(u, grid)
    chi = CutoffChi.for_supercell(L)
    x = grid.x
    assert np.allclose(phi.values[np.abs(x) <= chi.inner], 1.0, atol=1e-13)
    assert np.all(phi.values[np.abs(x) >= chi.outer] == 0)
    assert np.all(phi.derivs[np.abs(x) >= chi.outer] == 0)
    band = (np.abs(x) > chi.inner) & (np.abs(x) < chi.outer)
    assert np.allclose(phi.values[band], chi(x[band]), atol=1e-13)


@pytest.mark.parametrize("L", [1, 3, 6])
def test_extend_norm_bracket(L):
    u = random_real(np.random.default_rng(L), L, 6 * L)
    phi = extend(u, reference_grid(8, math.pi / 64))
    # χ = 1 on Γ_L and supp χ ⊂ Γ_{3L}: ‖u‖² <= ‖φ‖² <= 3‖u‖²
    l2 = phi.norms()[0] ** 2
    assert 1.0 - 1e-9 <= l2 <= 3.0


def test_extend_derivative_consistent():
    u = random_real(np.random.default_rng(4), 2, 8)
    grid = LineGrid(12.0, 1e-3)
    phi = extend(u, grid)
    fd = np.gradient(phi.values, grid.h)
    assert np.abs(fd - phi.derivs)[5:-5].max() < 1e-3 * np.abs(phi.derivs).max()


def test_real_gauge_removes_phase():
    u = random_real(np.random.default_rng(5), 2, 6)
    rotated = FourierVector(u.basis, np.exp(0.7j) * u.coeffs)
    g = real_gauge(rotated)
    assert g.is_real_field(1e-10)
    assert np.allclose(np.abs(g.coeffs), np.abs(u.coeffs))
    assert not np.iscomplexobj(synthesize_at(g, np.linspace(-3, 3, 5)))


# --- line errors ----------------------------------------------------------------

def gaussian(grid, scale=1.0):
    x = grid.x
    return ExtendedEigenfunction((0, 0, None), grid, scale * np.exp(-x ** 2), scale * -2 * x * np.exp(-x ** 2))


def test_line_error_examples():
    grid = LineGrid(10.0, math.pi / 64)
    a = gaussian(grid)
    assert line_error(a, a) == (0.0, 0.0)
    zero = gaussian(grid, 0.0)
    l2, h1 = line_error(a, zero)
    # ∫ e^{-2x²} = √(π/2) and ∫ 4x² e^{-2x²} = √(π/2)
    assert l2 ** 2 == pytest.approx(math.sqrt(math.pi / 2), rel=1e-6)
    assert h1 ** 2 == pytest.approx(2 * math.sqrt(math.pi / 2), rel=1e-6)
    b = gaussian(grid, 0.3)
    assert line_error(a, b) == line_error(b, a)


def test_line_error_grid_mismatch():
    with pytest.raises(ValueError):
        line_error(gaussian(LineGrid(10.0, 0.1)), gaussian(LineGrid(10.0, 0.05)))


def test_align_flips_sign():
    grid = LineGrid(10.0, 0.1)
    a = gaussian(grid)
    assert np.array_equal(align(-a, a).values, a.values)
    assert np.array_equal(align(a, a).values, a.values)


def test_grid_halving_invariant():
    # the default spacing already resolves the errors of a real study pair
    L, vper, w = 8, abs_sin_potential(), exp_defect()
    vecs = []
    for n in (40, 80):
        sol = eigh(assemble_exact(L, n, vper, w))
        i = int(np.argmin(np.abs(sol.eigenvalues - 1.69)))
        vecs.append(real_gauge(FourierVector(PlanewaveBasis(LatticeSpec(), L, n), sol.eigenvectors[:, i])))
    errs = []
    for h in (math.pi / 64, math.pi / 128):
        grid = reference_grid(L, h)
        ref = extend(vecs[1], grid)
        errs.append(line_error(align(extend(vecs[0], grid), ref), ref))
    for c, f in zip(*errs):
        assert abs(c - f) / f < 1e-6


# --- studies ------------------------------------------------------------------

def test_size_study_degenerate_reference(gap):
    cfg = StudyConfig(L_list=(10,), N_list=(10,), reference=(10, 100))
    rec = run_size_study(cfg, gap).records[0]
    assert (rec.abs_err, rec.err_l2, rec.err_h1) == (0.0, 0.0, 0.0)


def test_size_study_records(size_result, gap):
    recs = size_result.records
    assert [r.L for r in recs] == [6, 8, 10, 12, 14]
    for r in recs:
        assert r.ok and r.M_L is None and r.m_label == "Exact"
        assert gap.alpha < r.lam < gap.beta
        assert r.abs_err >= 0 and r.err_l2 >= 0 and r.err_h1 >= r.err_l2
        assert r.rel_err == pytest.approx(r.abs_err / size_result.lambda_ref)
    for attr in ("abs_err", "err_l2", "err_h1"):
        vals = [getattr(r, attr) for r in recs]
        assert all(b < a for a, b in zip(vals, vals[1:])), attr


def test_size_study_rate_doubling(size_result):
    rates = size_rates(size_result.records, 10)
    assert 1.6 <= rates.doubling_ratio <= 2.4
    assert rates.lam[0] < 0 and rates.lam[2] > 0.99


def test_size_study_parallel_matches_serial(size_result, gap):
    cfg = dataclasses.replace(size_result.config, workers=3)
    par = run_size_study(cfg, gap)
    assert [(r.lam, r.err_l2, r.err_h1) for r in par.records] == \
        [(r.lam, r.err_l2, r.err_h1) for r in size_result.records]


def test_missing_gap_eigenvalue_flagged(gap):
    # without a defect nothing sits inside the shrunk gap, so the reference run fails
    cfg = StudyConfig(L_list=(6,), N_list=(10,), reference=(20, 200), defect_scale=0.0)
    with pytest.raises(StudyError):
        run_size_study(cfg, gap)
    # a defect too weak to bind at small L: the record is kept and flagged
    cfg = StudyConfig(L_list=(1,), N_list=(2,), reference=(12, 120))
    rec = run_size_study(cfg, gap).records[0]
    assert rec.flag == "no_gap_eigenvalue" and math.isnan(rec.abs_err)


def test_quadrature_study_records(quad_result):
    recs = quad_result.records
    exact = [r for r in recs if r.M_L is None]
    assert [r.N for r in exact] == [2, 4, 6]
    assert all(r.abs_err == 0 and r.err_l2 == 0 and r.err_h1 == 0 for r in exact)
    for N in (2, 4, 6):
        row = sorted((r for r in recs if r.N == N and r.M_L is not None), key=lambda r: r.M_L)
        assert [r.M_L for r in row] == [56 * 6, 112 * 6, 224 * 6, 448 * 6]
        assert row[-1].abs_err <= row[0].abs_err
        assert row[-1].err_h1 <= row[0].err_h1


def test_exact_eigenvalue_monotone_in_n(gap):
    # nested Galerkin spaces: the gap eigenvalue cannot increase as N grows
    L, vper, w = 6, abs_sin_potential(), exp_defect()
    lams = []
    for N in (2, 4, 6, 8, 10, 12, 14):
        ev = eigh(assemble_exact(L, N * L, vper, w)).eigenvalues
        lams.append(ev[(ev > gap.alpha) & (ev < gap.beta)][0])
    assert all(b <= a + 1e-12 for a, b in zip(lams, lams[1:]))
    errs = [abs(x - lams[-1]) for x in lams]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def _gap_lambda(op):
    ev = eigh(op).eigenvalues
    return ev[np.argmin(np.abs(ev - 1.69))]


def test_large_m_proxy_per_mode():
    # M multiplier 64·N_L: the interpolated eigenvalue is within 1e-6 of exact integration
    L, N = 8, 10
    vper, w = abs_sin_potential(), exp_defect()
    exact = _gap_lambda(assemble_exact(L, N * L, vper, w))
    interp = _gap_lambda(assemble_interpolated(L, N * L, 64 * N * L * L, vper, w))
    assert abs(interp - exact) <= 1e-6


@pytest.mark.xfail(strict=True, reason="aliasing of the |sin x| kink leaves ~2.6e-6 at M = 64·N")
def test_large_m_proxy_literal():
    L, N = 8, 10
    vper, w = abs_sin_potential(), exp_defect()
    exact = _gap_lambda(assemble_exact(L, N * L, vper, w))
    interp = _gap_lambda(assemble_interpolated(L, N * L, 64 * N * L, vper, w))
    assert abs(interp - exact) <= 1e-6


def test_baseline_finest(gap):
    cfg = StudyConfig(L_list=(6,), quadrature_N_list=(2, 4), M_list=(112,), reference=(6, 24), baseline="finest")
    recs = run_quadrature_study(cfg, gap).records
    top = [r for r in recs if r.N == 4 and r.M_L is None][0]
    low = [r for r in recs if r.N == 2 and r.M_L is None][0]
    assert top.abs_err == 0 and low.abs_err > 0


# --- rates ----------------------------------------------------------------------

def test_fit_rate_examples():
    xs = np.arange(1.0, 6.0)
    slope, intercept, r2 = fit_rate(xs, -2 * xs)
    assert slope == pytest.approx(-2) and r2 == pytest.approx(1)
    slope, _, r2 = fit_rate(xs, np.full(5, 3.0))
    assert slope == pytest.approx(0, abs=1e-12) and r2 == 1
    rng = np.random.default_rng(11)
    xs = np.linspace(0, 10, 30)
    slope, _, _ = fit_rate(xs, -xs + 0.01 * rng.normal(size=30))
    assert slope == pytest.approx(-1, abs=0.05)


@pytest.mark.parametrize("xs, ys", [
    ([1, 1, 1], [1, 2, 3]),
    ([1, 2], [1, 2]),
    ([1, 3, 2], [1, 2, 3]),
    ([1, 2, 3], [1, 2]),
])
def test_fit_rate_rejects(xs, ys):
    with pytest.raises(ValueError):
        fit_rate(xs, ys)


def test_record_sorting_and_labels():
    a = ConvergenceRecord(6, 60, None, 1.7, 0, 0, 0, 0)
    b = ConvergenceRecord(6, 60, 336, 1.7, 0, 0, 0, 0)
    assert sorted([a, b], key=ConvergenceRecord.sort_key) == [b, a]
    assert a.m_label == "Exact" and b.m_label == "336" and a.N == 10 and a.ok
