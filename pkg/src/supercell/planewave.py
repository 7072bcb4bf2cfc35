"""
Supercell planewave bookkeeping and discrete Fourier analysis in one dimension.

A supercell of size L is the interval Γ_L = [-ℓL/2, ℓL/2) where ℓ is the
period of the underlying lattice. Functions on it are expanded on the
orthonormal planewaves

    e_m(x) = |Γ_L|^{-1/2} exp(i k_m x),    k_m = (2π/ℓ) m / L,

with integer modes |m| <= nmodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# rows of the direct DFT evaluated per block, bounds peak memory
_DFT_BLOCK = 256


@dataclass(frozen=True)
class LatticeSpec:
    """One-dimensional lattice ℓZ with unit cell of length ``period``."""

    period: float = 2.0 * np.pi
    dimension: int = 1

    def __post_init__(self):
        if self.dimension != 1:
            raise ValueError("only one-dimensional lattices are supported")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def reciprocal(self) -> float:
        """Length 2π/ℓ of the reciprocal lattice vector."""
        return 2.0 * np.pi / self.period


@dataclass(frozen=True)
class PlanewaveBasis:
    lattice: LatticeSpec
    L: int
    nmodes: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"supercell size must be a positive integer, got {self.L}")
        if int(self.nmodes) != self.nmodes or self.nmodes < 0:
            raise ValueError(f"mode bound must be a non-negative integer, got {self.nmodes}")

    @property
    def dim(self) -> int:
        return 2 * self.nmodes + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.nmodes, self.nmodes + 1)

    @property
    def kvalues(self) -> np.ndarray:
        return self.lattice.reciprocal * self.modes / self.L

    @property
    def volume(self) -> float:
        """|Γ_L|, the supercell length."""
        return self.lattice.period * self.L

    def index(self, m: int) -> int:
        """Position of mode ``m`` in coefficient arrays."""
        if abs(m) > self.nmodes:
            raise IndexError(f"mode {m} outside basis |m| <= {self.nmodes}")
        return m + self.nmodes


def basis_kvalues(basis: PlanewaveBasis) -> np.ndarray:
    return basis.kvalues


@dataclass(frozen=True, eq=False)
class FourierVector:
    """Coefficients of ``sum_m coeffs[m] e_m`` in a planewave basis."""

    basis: PlanewaveBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, basis: PlanewaveBasis) -> FourierVector:
        return cls(basis, np.zeros(basis.dim, dtype=complex))

    @classmethod
    def mode(cls, basis: PlanewaveBasis, m: int, value: complex = 1.0) -> FourierVector:
        c = np.zeros(basis.dim, dtype=complex)
        c[basis.index(m)] = value
        return cls(basis, c)

    def is_real_field(self, rtol: float = 1e-12) -> bool:
        """True when the represented function is real, i.e. c(-m) = conj(c(m))."""
        c = self.coeffs
        scale = max(np.abs(c).max(initial=0.0), np.finfo(float).tiny)
        return bool(np.abs(c[::-1] - c.conj()).max(initial=0.0) <= rtol * scale)

    def inner(self, other: FourierVector) -> complex:
        """L²_per(Γ_L) inner product, antilinear in ``self``."""
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.coeffs, other.coeffs))

    def resized(self, nmodes: int) -> FourierVector:
        """Same function on a basis with a different mode bound (truncate or zero-pad)."""
        basis = PlanewaveBasis(self.basis.lattice, self.basis.L, nmodes)
        out = np.zeros(basis.dim, dtype=complex)
        n = min(nmodes, self.basis.nmodes)
        out[nmodes - n: nmodes + n + 1] = self.coeffs[self.basis.nmodes - n: self.basis.nmodes + n + 1]
        return FourierVector(basis, out)

    def __add__(self, other: FourierVector) -> FourierVector:
        _check_same_basis(self.basis, other.basis)
        return FourierVector(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: FourierVector) -> FourierVector:
        _check_same_basis(self.basis, other.basis)
        return FourierVector(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> FourierVector:
        return FourierVector(self.basis, scalar * self.coeffs)

    __rmul__ = __mul__


def _check_same_basis(a: PlanewaveBasis, b: PlanewaveBasis):
    if a != b:
        raise ValueError(f"basis mismatch: {a} vs {b}")


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform grid of M nodes per supercell period.

    Nodes are x_j = (j - M//2) h with h = ℓL/M, i.e. the points of the lattice
    hZ lying in [-ℓL/2, ℓL/2). For even M the first node is -ℓL/2.
    """

    lattice: LatticeSpec
    L: int
    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"grid size M must be a positive integer, got {self.M}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"supercell size must be a positive integer, got {self.L}")

    @property
    def spacing(self) -> float:
        return self.lattice.period * self.L / self.M

    @property
    def offset(self) -> int:
        return self.M // 2

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.M) - self.offset) * self.spacing


@dataclass(frozen=True, eq=False)
class GridField:
    grid: SamplingGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} samples, got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def dft_coefficients(samples: GridField, modes) -> np.ndarray:
    """Discrete Fourier coefficients (1/M) Σ_j u(x_j) exp(-i k_m x_j) at integer ``modes``.

    Any integer mode is accepted; the result is M-periodic in the mode index.
    """
    grid = samples.grid
    modes = np.asarray(modes)
    j = np.arange(grid.M) - grid.offset
    # phase depends on m*j mod M only, reduce to keep arguments small
    m_red = np.mod(modes, grid.M).reshape(-1)
    out = np.empty(m_red.shape, dtype=complex)
    f = samples.values
    for start in range(0, m_red.size, _DFT_BLOCK):
        block = m_red[start: start + _DFT_BLOCK]
        arg = np.mod(np.outer(block, j), grid.M) * (-2.0 * np.pi / grid.M)
        out[start: start + _DFT_BLOCK] = np.exp(1j * arg) @ f
    return (out / grid.M).reshape(modes.shape)


def analyze(samples: GridField, method: str = "direct") -> np.ndarray:
    """All M discrete Fourier coefficients, entry m (0 <= m < M) for frequency k_m.

    ``method="direct"`` sums the O(M²) definition, ``method="fft"`` uses numpy's FFT.
    """
    grid = samples.grid
    if method == "direct":
        return dft_coefficients(samples, np.arange(grid.M))
    if method == "fft":
        m = np.arange(grid.M)
        shift = np.exp(2j * np.pi * np.mod(m * grid.offset, grid.M) / grid.M)
        return shift * np.fft.fft(samples.values) / grid.M
    raise ValueError(f"unknown transform method {method!r}")


def synthesize_at(vec: FourierVector, x) -> np.ndarray:
    """Evaluate Σ_m c_m e_m(x) at arbitrary points.

    Real-symmetric coefficient vectors give real output.
    """
    basis = vec.basis
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    flat = x.reshape(-1)
    res = out.reshape(-1)
    k = basis.kvalues
    scale = basis.volume ** -0.5
    for start in range(0, flat.size, _DFT_BLOCK):
        res[start: start + _DFT_BLOCK] = np.exp(1j * np.outer(flat[start: start + _DFT_BLOCK], k)) @ vec.coeffs
    out *= scale
    if vec.is_real_field():
        # round-off is measured against the sup bound of the expansion
        mag = max(scale * np.abs(vec.coeffs).sum(), np.finfo(float).tiny)
        if np.abs(out.imag).max(initial=0.0) <= 1e-10 * mag:
            return out.real.copy()
    return out


def synthesize_on_grid(vec: FourierVector, grid: SamplingGrid) -> GridField:
    if grid.L != vec.basis.L or grid.lattice != vec.basis.lattice:
        raise ValueError(f"grid supercell L={grid.L} does not match basis L={vec.basis.L}")
    return GridField(grid, synthesize_at(vec, grid.nodes))


def project(vec: FourierVector, nmodes_target: int) -> FourierVector:
    """Orthogonal projection onto modes |m| <= nmodes_target, kept in the same basis."""
    if nmodes_target < 0:
        raise ValueError("target mode bound must be non-negative")
    keep = np.abs(vec.basis.modes) <= nmodes_target
    return FourierVector(vec.basis, np.where(keep, vec.coeffs, 0.0))


def interpolate(samples: GridField) -> FourierVector:
    """Trigonometric interpolant of grid samples.

    For odd M the window is |m| <= (M-1)/2. For even M the window is |m| <= M/2
    and the Nyquist coefficient is split evenly over ±M/2 (a cosine), so real
    samples give a real interpolant.
    """
    grid = samples.grid
    M = grid.M
    half = M // 2
    basis = PlanewaveBasis(grid.lattice, grid.L, half)
    d = dft_coefficients(samples, basis.modes)
    if M % 2 == 0:
        d[0] *= 0.5
        d[-1] = d[0]
    return FourierVector(basis, np.sqrt(basis.volume) * d)


def sobolev_norm(vec: FourierVector, r: float) -> float:
    """(Σ_m (1 + k_m²)^r |c_m|²)^{1/2}; r = 0 is the L² norm."""
    w = (1.0 + vec.basis.kvalues ** 2) ** r
    return float(np.sqrt(np.sum(w * np.abs(vec.coeffs) ** 2)))


def differentiate(vec: FourierVector) -> FourierVector:
    return FourierVector(vec.basis, 1j * vec.basis.kvalues * vec.coeffs)
