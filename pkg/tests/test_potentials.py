import math

import numpy as np
import pytest
from scipy import integrate

from supercell.planewave import LatticeSpec, SamplingGrid
from supercell.potentials import (CutoffChi, DefectPotential, PeriodicPotential, TaperXi, abs_sin_potential,
                                  chi_deriv, chi_eval, defect_periodized_coeff, exp_defect, potential_samples,
                                  tilde_w_samples, vper_coeff, xi_eval, zero_defect)

TWO_PI = 2 * math.pi


def quad_vper(m):
    f = lambda x: abs(math.sin(x)) * math.cos(m * x)
    return (integrate.quad(f, -math.pi, 0, limit=200)[0] + integrate.quad(f, 0, math.pi, limit=200)[0]) / TWO_PI


def quad_defect(L, k):
    a = math.pi * L
    f = lambda x: -2 * math.exp(-abs(x)) * math.cos(k * x)
    val = integrate.quad(f, -a, 0, limit=400, epsabs=1e-14)[0] + integrate.quad(f, 0, a, limit=400, epsabs=1e-14)[0]
    return val / math.sqrt(TWO_PI * L)


# --- periodic potential -------------------------------------------------------

def test_vper_coeff_examples():
    assert vper_coeff(0) == pytest.approx(2 / math.pi, abs=1e-15)
    assert vper_coeff(2) == pytest.approx(-2 / (3 * math.pi), abs=1e-15)
    assert vper_coeff(-2) == vper_coeff(2)
    assert np.all(vper_coeff(np.array([1, -3, 5, 7])) == 0)


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4, 10, 17, 50])
def test_vper_coeff_against_quadrature(m):
    assert abs(vper_coeff(m) - quad_vper(m)) <= 1e-9


def test_vper_coeff_real_symmetric():
    m = np.arange(-30, 31)
    c = vper_coeff(m)
    assert np.array_equal(c, c[::-1])


def test_quadrature_fallback_matches_closed_form():
    plain = PeriodicPotential("abs_sin_quad", lambda x: np.abs(np.sin(x)), even=True, kinks=(0.0,))
    m = np.arange(-8, 9)
    assert np.abs(plain.coefficient(m) - vper_coeff(m)).max() <= 1e-9


def test_non_even_fallback_has_imaginary_part():
    shifted = PeriodicPotential("shifted", lambda x: np.cos(x + 0.3))
    c1 = shifted.coefficient(np.array([1, -1]))
    # cos(x + θ) = (e^{iθ} e^{ix} + e^{-iθ} e^{-ix}) / 2
    assert c1[0] == pytest.approx(0.5 * np.exp(0.3j), abs=1e-10)
    assert c1[1] == pytest.approx(np.conj(c1[0]), abs=1e-10)


# --- defect -------------------------------------------------------------------

@pytest.mark.parametrize("L, m", [(1, 0), (4, 2), (1, 3), (2, 5), (8, 50), (8, -17), (3, 1)])
def test_defect_coeff_against_quadrature(L, m):
    k = m / L
    assert abs(defect_periodized_coeff(L, k) - quad_defect(L, k)) <= 1e-10


def test_defect_coeff_closed_form_l1():
    expected = -4 / math.sqrt(TWO_PI) * (1 - math.exp(-math.pi))
    assert defect_periodized_coeff(1, 0.0) == pytest.approx(expected, abs=1e-14)


def test_defect_rejects_off_lattice():
    with pytest.raises(ValueError):
        defect_periodized_coeff(4, 0.3)
    with pytest.raises(ValueError):
        exp_defect().coefficient(2, 0.25)


def test_zero_defect():
    assert np.all(zero_defect().coefficient(3, np.arange(-5, 6) / 3) == 0)


def test_defect_quadrature_fallback():
    plain = DefectPotential("exp_quad", lambda x: -2 * np.exp(-np.abs(x)), even=True, kinks=(0.0,))
    k = np.arange(-6, 7) / 3
    assert np.abs(plain.coefficient(3, k) - defect_periodized_coeff(3, k)).max() <= 1e-10


def test_tail_bound_monotone_and_matches_sampling():
    w = exp_defect()
    tails = [w.tail_bound(L) for L in range(1, 10)]
    assert all(b <= a for a, b in zip(tails, tails[1:]))
    plain = DefectPotential("exp_sampled", w.evaluate)
    assert plain.tail_bound(3) == pytest.approx(w.tail_bound(3), rel=1e-12)
    assert w.tail_bound(4) == pytest.approx(2 * math.exp(-3 * math.pi))


def test_defect_coeff_hermitian():
    k = np.arange(-20, 21) / 4
    c = defect_periodized_coeff(4, k)
    assert np.allclose(c, np.conj(c[::-1]), atol=0)


# --- cutoffs ------------------------------------------------------------------

@pytest.mark.parametrize("L", [1, 2, 6, 18])
def test_chi_shape(L):
    chi = CutoffChi.for_supercell(L)
    a, b = math.pi * L, math.pi * (L + math.sqrt(L))
    assert chi(0.0) == 1 and chi(a) == 1 and chi(-a) == 1
    assert chi(b) == 0 and chi(b + 1) == 0
    assert chi((a + b) / 2) == pytest.approx(0.5, abs=1e-12)
    x = np.linspace(-b - 1, b + 1, 2001)
    v = chi(x)
    assert np.all((v >= 0) & (v <= 1))
    for edge in (a, b):
        assert abs(chi.deriv(edge)) < 1e-12 and abs(chi.deriv2(edge)) < 1e-12
    assert chi_eval(L, 0.3) == chi(0.3) and chi_deriv(L, a + 0.1) == chi.deriv(a + 0.1)


def test_chi_derivative_matches_finite_difference():
    chi = CutoffChi.for_supercell(5)
    x = np.linspace(-25, 25, 401)
    h = 1e-6
    fd = (chi(x + h) - chi(x - h)) / (2 * h)
    assert np.abs(fd - chi.deriv(x)).max() < 1e-7
    fd2 = (chi.deriv(x + h) - chi.deriv(x - h)) / (2 * h)
    assert np.abs(fd2 - chi.deriv2(x)).max() < 1e-6


def test_chi_derivative_bounded_uniformly():
    sups = [np.abs(CutoffChi.for_supercell(L).deriv(np.linspace(0, 4 * L, 4001))).max() for L in (1, 4, 16, 64)]
    # sup |χ'| = 15/8 / (π √L) shrinks with L
    assert all(b <= a for a, b in zip(sups, sups[1:]))
    assert sups[0] < 1


@pytest.mark.parametrize("L", [1, 2, 5, 12])
def test_xi_shape(L):
    xi = TaperXi.for_supercell(L)
    inner, outer = math.pi * (L - 1), math.pi * (L - 0.5)
    assert xi(inner) == 1 and xi(-inner) == 1 and xi(0) == 1
    assert xi(outer) == 0 and xi(outer + 1) == 0
    assert xi((inner + outer) / 2) == pytest.approx(0.5, abs=1e-12)
    v = xi(np.linspace(-outer - 1, outer + 1, 1001))
    assert np.all((v >= 0) & (v <= 1))
    assert xi_eval(L, 0.1) == xi(0.1)


def test_junction_smoothness_orders():
    # one-sided finite differences across a junction: the jump in the j-th derivative
    # vanishes for j up to the smoothness order
    chi = CutoffChi.for_supercell(4)
    xi = TaperXi.for_supercell(4)
    for f, d1, edge in ((chi, chi.deriv, chi.inner), (chi, chi.deriv, chi.outer), (xi, xi.deriv, xi.inner)):
        for h in (1e-3, 1e-4):
            left = (d1(edge - h) - d1(edge - 2 * h)) / h
            right = (d1(edge + 2 * h) - d1(edge + h)) / h
            assert abs(left - right) < 50 * h  # second derivative continuous
    # third derivative: continuous for the septic ξ, jumps for the quintic χ
    def third_jump(d1, e, h=1e-4):
        left = (d1(e - h) - 2 * d1(e - 2 * h) + d1(e - 3 * h)) / h ** 2
        right = (d1(e + 3 * h) - 2 * d1(e + 2 * h) + d1(e + h)) / h ** 2
        return abs(left - right)

    assert third_jump(xi.deriv, xi.inner) < 0.05
    assert third_jump(xi.deriv, xi.outer) < 0.05
    assert third_jump(chi.deriv, chi.inner) > 0.1


# --- samples ------------------------------------------------------------------

def test_tilde_w_samples():
    L = 4
    grid = SamplingGrid(LatticeSpec(), L, 256)
    w = exp_defect()
    s = tilde_w_samples(L, grid, w).values
    x = grid.nodes
    plateau = np.abs(x) <= math.pi * (L - 1)
    assert np.array_equal(s[plateau], w(x[plateau]))
    assert np.all(s[np.abs(x) >= math.pi * (L - 0.5)] == 0)
    with pytest.raises(ValueError):
        tilde_w_samples(3, grid, w)


@pytest.mark.parametrize("L", [2, 4, 6])
def test_tilde_w_sup_error(L):
    x = np.linspace(-math.pi * L, math.pi * L, 200001)
    w = exp_defect()
    err = np.abs(TaperXi.for_supercell(L)(x) * w(x) - w(x)).max()
    assert err <= w.tail_bound(L) * (1 + 1e-12)
    assert w.tail_bound(L) == pytest.approx(2 * math.exp(-math.pi * (L - 1)))


def test_potential_samples_real():
    L = 3
    grid = SamplingGrid(LatticeSpec(), L, 101)
    s = potential_samples(L, grid, abs_sin_potential(), exp_defect()).values
    assert not np.iscomplexobj(s)
    assert np.allclose(s, np.abs(np.sin(grid.nodes)) + tilde_w_samples(L, grid, exp_defect()).values)
