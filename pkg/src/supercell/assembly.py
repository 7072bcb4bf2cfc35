"""
Dense Galerkin matrices of the supercell Hamiltonian and of the Bloch fibers.

All matrices are expressed in the orthonormal planewave basis, so the mass
matrix is the identity and entry (m, m') is <e_m, H e_m'>.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .planewave import LatticeSpec, PlanewaveBasis, SamplingGrid, analyze, dft_coefficients
from .potentials import DefectPotential, PeriodicPotential, potential_samples


class QuadratureWarning(UserWarning):
    """Grid too coarse for the interpolated product rule to be exact."""


@dataclass(frozen=True, eq=False)
class SupercellOperator:
    basis: PlanewaveBasis
    matrix: np.ndarray
    integration: str  # "exact" or "interpolated"
    M: Optional[int] = None

    @property
    def L(self) -> int:
        return self.basis.L

    @property
    def nmodes(self) -> int:
        return self.basis.nmodes

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)

    def label(self) -> str:
        m = "Exact" if self.M is None else str(self.M)
        return f"L={self.L} N_L={self.nmodes} M_L={m}"


@dataclass(frozen=True, eq=False)
class BlochFiber:
    q: float
    nmodes: int
    matrix: np.ndarray


def _toeplitz_from_differences(t: np.ndarray, nmodes: int) -> np.ndarray:
    """Matrix T[i, j] = t[(m_i - m_j) + 2 nmodes] for m in -nmodes..nmodes."""
    m = np.arange(-nmodes, nmodes + 1)
    return t[m[:, None] - m[None, :] + 2 * nmodes]


def _finish(kinetic: np.ndarray, t: np.ndarray, nmodes: int, real: bool) -> np.ndarray:
    if real:
        # even real potentials give real coefficients; drop round-off imaginary parts
        if np.iscomplexobj(t):
            scale = max(np.abs(t).max(initial=0.0), 1.0)
            if np.abs(t.imag).max(initial=0.0) > 1e-12 * scale:
                raise ValueError("potential declared even but has complex Fourier coefficients")
            t = t.real
        H = _toeplitz_from_differences(np.asarray(t, dtype=float), nmodes)
    else:
        H = _toeplitz_from_differences(np.asarray(t, dtype=complex), nmodes)
    H[np.diag_indices_from(H)] += kinetic
    return H


def assemble_exact(L: int, nmodes: int, vper: PeriodicPotential, defect: DefectPotential,
                   lattice: Optional[LatticeSpec] = None) -> SupercellOperator:
    """H_{L,N}: kinetic k_m², periodic part c((m-m')/L), defect |Γ_L|^{-1/2} Ŵ_L(k_m' - k_m).

    The periodic potential only couples modes whose difference is a multiple of L.
    """
    lattice = lattice or LatticeSpec(vper.period)
    if not np.isclose(lattice.period, vper.period):
        raise ValueError("periodic potential period does not match the lattice")
    basis = PlanewaveBasis(lattice, L, nmodes)
    n = np.arange(-2 * nmodes, 2 * nmodes + 1)  # n = m - m'
    per = np.zeros(n.shape, dtype=complex)
    hit = (n % L) == 0
    per[hit] = vper.coefficient(n[hit] // L)
    k_diff = -lattice.reciprocal * n / L  # k_m' - k_m
    w = defect.coefficient(L, k_diff, lattice.period) / np.sqrt(basis.volume)
    t = per + w
    H = _finish(basis.kvalues ** 2, t, nmodes, vper.even and defect.even)
    return SupercellOperator(basis, H, "exact")


def assemble_interpolated(L: int, nmodes: int, M: int, vper: PeriodicPotential, defect: DefectPotential,
                          lattice: Optional[LatticeSpec] = None, transform: str = "direct") -> SupercellOperator:
    """H_{L,N,M}: potential replaced by the DFT data of V_per + ξ_L W on M nodes per supercell.

    Entry (m, m') uses the discrete coefficient at index m - m' (M-periodic), which
    is the trapezoidal rule for ∫ V ē_m e_m'. For M >= 4 nmodes + 1 this equals the
    Galerkin form of the trigonometric interpolant of V. ``transform="fft"``
    computes the same coefficients with a fast transform.
    """
    if int(M) != M or M <= 0:
        raise ValueError(f"grid size M must be a positive integer, got {M}")
    if M < 4 * nmodes + 1:
        warnings.warn(f"M={M} < 4*N+1={4 * nmodes + 1}: interpolated product rule is not exact",
                      QuadratureWarning, stacklevel=2)
    lattice = lattice or LatticeSpec(vper.period)
    basis = PlanewaveBasis(lattice, L, nmodes)
    grid = SamplingGrid(lattice, L, M)
    samples = potential_samples(L, grid, vper, defect)
    n = np.arange(-2 * nmodes, 2 * nmodes + 1)
    if transform == "fft":
        t = analyze(samples, "fft")[np.mod(n, M)]
    else:
        t = dft_coefficients(samples, n)
    H = _finish(basis.kvalues ** 2, t, nmodes, vper.even and defect.even)
    return SupercellOperator(basis, H, "interpolated", M)


def assemble_bloch(q: float, unit_cell_modes: int, vper: PeriodicPotential) -> BlochFiber:
    """Fiber H(q) on unit-cell modes: (κm + q)² on the diagonal plus c(m - m')."""
    kappa = 2.0 * np.pi / vper.period
    if abs(q) > kappa / 2 * (1 + 1e-12):
        raise ValueError(f"|q| must not exceed π/ℓ = {kappa / 2}, got {q}")
    if unit_cell_modes < 1:
        raise ValueError("unit_cell_modes must be >= 1")
    n = np.arange(-2 * unit_cell_modes, 2 * unit_cell_modes + 1)
    t = vper.coefficient(n)
    m = np.arange(-unit_cell_modes, unit_cell_modes + 1)
    H = _finish((kappa * m + q) ** 2, t, unit_cell_modes, vper.even)
    return BlochFiber(q, unit_cell_modes, H)
