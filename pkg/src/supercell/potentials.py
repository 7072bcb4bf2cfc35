"""
Periodic background potentials, localized defects, and the smooth cutoffs.

Built-in instances are V_per(x) = |sin x| on the 2π lattice and the
exponential well W(x) = -2 exp(-|x|). User potentials only need a pointwise
evaluator; Fourier data falls back to adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .planewave import GridField, LatticeSpec, SamplingGrid

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """Real potential with V(x + period) = V(x) and unit-cell coefficients c(m).

    ``V(x) = Σ_m c(m) exp(i (2π/period) m x)``. ``kinks`` lists points of
    reduced smoothness inside [-period/2, period/2] (used as quadrature breakpoints).
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    coeff: Optional[Callable[[np.ndarray], np.ndarray]] = None
    period: float = TWO_PI
    even: bool = False
    kinks: tuple = ()

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    def coefficient(self, m) -> np.ndarray:
        m = np.asarray(m)
        if self.coeff is not None:
            return np.asarray(self.coeff(m))
        flat = [self._quad_coeff(int(mi)) for mi in m.reshape(-1)]
        return np.array(flat, dtype=complex).reshape(m.shape)

    @lru_cache(maxsize=4096)
    def _quad_coeff(self, m: int) -> complex:
        half = self.period / 2
        kappa = TWO_PI / self.period * m
        pts = sorted(set(p for p in self.kinks if -half < p < half))
        re = _quad(lambda x: float(self.evaluate(np.array(x))) * math.cos(kappa * x), -half, half, pts)
        im = 0.0 if self.even else _quad(lambda x: -float(self.evaluate(np.array(x))) * math.sin(kappa * x),
                                         -half, half, pts)
        return complex(re, im) / self.period


@dataclass(frozen=True, eq=False)
class DefectPotential:
    """Bounded decaying defect W with supercell Fourier data.

    ``periodized(L, k, period)`` returns |Γ_L|^{-1/2} ∫_{Γ_L} W(x) exp(i k x) dx
    for the hard truncation of W to Γ_L. ``tail(L, period)`` bounds |W| outside
    Γ_{L-1}.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    periodized: Optional[Callable[[int, np.ndarray, float], np.ndarray]] = None
    tail: Optional[Callable[[int, float], float]] = None
    even: bool = False
    kinks: tuple = ()

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    def coefficient(self, L: int, k, period: float = TWO_PI) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        _check_on_lattice(L, k, period)
        if self.periodized is not None:
            return np.asarray(self.periodized(L, k, period))
        flat = [self._quad_coeff(L, float(ki), period) for ki in k.reshape(-1)]
        return np.array(flat, dtype=complex).reshape(k.shape)

    def tail_bound(self, L: int, period: float = TWO_PI) -> float:
        """sup |W| over |x| >= period (L-1)/2; dense sampling when no closed form is given."""
        if self.tail is not None:
            return float(self.tail(L, period))
        x0 = period * (L - 1) / 2
        x = x0 + np.linspace(0.0, 50.0 * period, 20001)
        return float(max(np.abs(self(x)).max(), np.abs(self(-x)).max()))

    @lru_cache(maxsize=8192)
    def _quad_coeff(self, L: int, k: float, period: float) -> complex:
        half = period * L / 2
        pts = sorted(set(p for p in self.kinks if -half < p < half))
        re = _quad(lambda x: float(self.evaluate(np.array(x))) * math.cos(k * x), -half, half, pts)
        im = 0.0 if self.even else _quad(lambda x: float(self.evaluate(np.array(x))) * math.sin(k * x),
                                         -half, half, pts)
        return complex(re, im) / math.sqrt(period * L)


def _quad(f, a, b, points):
    # split at breakpoints so each piece is smooth; oscillatory pieces need a generous limit
    edges = [a, *points, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12)
        total += val
    return total


def _check_on_lattice(L: int, k: np.ndarray, period: float):
    m = k * L * period / TWO_PI
    if np.any(np.abs(m - np.round(m)) > 1e-9 * np.maximum(1.0, np.abs(m))):
        raise ValueError("wavevector not on the supercell frequency lattice (2π/ℓ)Z/L")


# --- built-in potentials -------------------------------------------------------

def vper_coeff(m) -> np.ndarray:
    """Unit-cell Fourier coefficients of |sin x| on the 2π lattice.

    c(0) = 2/π, c(m) = -2/(π(m²-1)) for even m, 0 for odd m.
    """
    m = np.asarray(m)
    out = np.zeros(m.shape)
    even = (m % 2) == 0
    me = m[even].astype(float)
    out[even] = -2.0 / (np.pi * (me ** 2 - 1.0))
    return out


def abs_sin_potential(scale: float = 1.0) -> PeriodicPotential:
    return PeriodicPotential(
        name="abs_sin",
        evaluate=lambda x: scale * np.abs(np.sin(x)),
        coeff=lambda m: scale * vper_coeff(m),
        period=TWO_PI,
        even=True,
        kinks=(0.0,),
    )


def zero_periodic(period: float = TWO_PI) -> PeriodicPotential:
    return PeriodicPotential(
        name="zero",
        evaluate=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        coeff=lambda m: np.zeros(np.shape(m)),
        period=period,
        even=True,
    )


def defect_periodized_coeff(L: int, k, period: float = TWO_PI, strength: float = 2.0) -> np.ndarray:
    """Closed-form supercell coefficient of W(x) = -strength·exp(-|x|) truncated to Γ_L.

    With a = ℓL/2: -2·strength·|Γ_L|^{-1/2} [1 + e^{-a}(k sin(ka) - cos(ka))] / (1 + k²).
    """
    k = np.asarray(k, dtype=float)
    _check_on_lattice(L, k, period)
    a = period * L / 2
    vol = period * L
    return -2.0 * strength / np.sqrt(vol) * (1.0 + np.exp(-a) * (k * np.sin(k * a) - np.cos(k * a))) / (1.0 + k ** 2)


def exp_defect(scale: float = 1.0) -> DefectPotential:
    """W(x) = -2·scale·exp(-|x|)."""
    strength = 2.0 * scale
    return DefectPotential(
        name="exp",
        evaluate=lambda x: -strength * np.exp(-np.abs(x)),
        periodized=lambda L, k, period: defect_periodized_coeff(L, k, period, strength),
        tail=lambda L, period: abs(strength) * math.exp(-period * (L - 1) / 2),
        even=True,
        kinks=(0.0,),
    )


def zero_defect() -> DefectPotential:
    return DefectPotential(
        name="zero",
        evaluate=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        periodized=lambda L, k, period: np.zeros(np.shape(k)),
        tail=lambda L, period: 0.0,
        even=True,
    )


# --- cutoff functions ---------------------------------------------------------

def _quintic(t):
    # C² step 0 -> 1 with vanishing first and second derivatives at both ends
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)


def _quintic_d1(t):
    return 30.0 * t ** 2 * (1.0 - t) ** 2


def _quintic_d2(t):
    return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


def _septic(t):
    # C³ step
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)


def _septic_d1(t):
    return 140.0 * t ** 3 * (1.0 - t) ** 3


@dataclass(frozen=True)
class _Blend:
    inner: float
    outer: float

    def _t(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        return np.clip((ax - self.inner) / (self.outer - self.inner), 0.0, 1.0)


@dataclass(frozen=True)
class CutoffChi(_Blend):
    """χ_L: 1 on [-ℓL/2, ℓL/2], 0 outside [-ℓ(L+√L)/2, ℓ(L+√L)/2], C² quintic between."""

    @classmethod
    def for_supercell(cls, L: int, period: float = TWO_PI) -> CutoffChi:
        if L < 1:
            raise ValueError("L must be >= 1")
        return cls(period * L / 2, period * (L + math.sqrt(L)) / 2)

    def __call__(self, x):
        return 1.0 - _quintic(self._t(x))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return -_quintic_d1(self._t(x)) * np.sign(x) / (self.outer - self.inner)

    def deriv2(self, x):
        return -_quintic_d2(self._t(x)) / (self.outer - self.inner) ** 2


@dataclass(frozen=True)
class TaperXi(_Blend):
    """ξ_L: 1 on Γ_{L-1}, 0 outside (L-1/2)Γ, C³ septic between."""

    @classmethod
    def for_supercell(cls, L: int, period: float = TWO_PI) -> TaperXi:
        if L < 1:
            raise ValueError("L must be >= 1")
        return cls(period * (L - 1) / 2, period * (L - 0.5) / 2)

    def __call__(self, x):
        return 1.0 - _septic(self._t(x))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return -_septic_d1(self._t(x)) * np.sign(x) / (self.outer - self.inner)


def chi_eval(L: int, x, period: float = TWO_PI):
    return CutoffChi.for_supercell(L, period)(x)


def chi_deriv(L: int, x, period: float = TWO_PI):
    return CutoffChi.for_supercell(L, period).deriv(x)


def xi_eval(L: int, x, period: float = TWO_PI):
    return TaperXi.for_supercell(L, period)(x)


def tilde_w_samples(L: int, grid: SamplingGrid, defect: DefectPotential) -> GridField:
    """Samples of ξ_L·W at the grid nodes (nodes lie in the centered supercell)."""
    if grid.L != L:
        raise ValueError(f"grid supercell L={grid.L} does not match L={L}")
    x = grid.nodes
    xi = TaperXi.for_supercell(L, grid.lattice.period)
    return GridField(grid, xi(x) * defect(x))


def potential_samples(L: int, grid: SamplingGrid, vper: PeriodicPotential,
                      defect: DefectPotential) -> GridField:
    """Samples of V_per + ξ_L·W, the function interpolated by the quadrature scheme."""
    w = tilde_w_samples(L, grid, defect)
    return GridField(grid, vper(grid.nodes) + w.values)


def default_lattice() -> LatticeSpec:
    return LatticeSpec(TWO_PI)
