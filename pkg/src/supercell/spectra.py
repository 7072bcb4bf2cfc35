"""
Eigendecomposition, band structure, and spectral-pollution diagnostics.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .assembly import SupercellOperator, assemble_bloch
from .potentials import PeriodicPotential

logger = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class EigensolverError(RuntimeError):
    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class ResolutionError(RuntimeError):
    """Band computation not converged in the number of unit-cell modes."""


@dataclass(frozen=True, eq=False)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    norm_estimate: float

    def __len__(self):
        return self.eigenvalues.size


@dataclass(frozen=True, eq=False)
class Eigenpair:
    index: int
    value: float
    vector: np.ndarray


def _as_matrix(H) -> np.ndarray:
    if isinstance(H, SupercellOperator):
        return H.matrix
    return np.asarray(H)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component made real positive; first index wins ties
    idx = np.argmax(np.abs(vecs), axis=0)
    pivot = vecs[idx, np.arange(vecs.shape[1])]
    phase = pivot / np.abs(pivot)
    return vecs * phase.conj() if np.iscomplexobj(vecs) else vecs * np.sign(pivot)


def eigh(H) -> EigenSolution:
    """Full Hermitian eigendecomposition with ascending eigenvalues and residual norms."""
    A = _as_matrix(H)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    asym = np.abs(A - A.conj().T).max(initial=0.0)
    if asym > 1e-10 * scale:
        raise ValueError(f"matrix is not Hermitian (max |H - H*| = {asym:.3e})")
    try:
        w, v = scipy.linalg.eigh(A, driver="evd", check_finite=True)
    except np.linalg.LinAlgError as exc:
        found = re.search(r"\d+", str(exc))
        index = int(found.group()) if found else None
        raise EigensolverError(f"eigensolver failed to converge: {exc}", index) from exc
    v = _fix_phase(v)
    res = np.linalg.norm(A @ v - v * w, axis=0)
    norm_est = float(np.max(np.abs(w))) if w.size else 0.0
    return EigenSolution(w, v, res, norm_est)


def window(sol: EigenSolution, lo: float, hi: float) -> list[Eigenpair]:
    """Eigenpairs with lo < λ < hi."""
    if not lo < hi:
        raise ValueError("window requires lo < hi")
    idx = np.nonzero((sol.eigenvalues > lo) & (sol.eigenvalues < hi))[0]
    return [Eigenpair(int(i), float(sol.eigenvalues[i]), sol.eigenvectors[:, i]) for i in idx]


def nearest_eigenpair(sol: EigenSolution, target: float, reference: Optional[np.ndarray] = None) -> Eigenpair:
    """Pair minimizing |λ - target|, ties toward the smaller λ.

    With ``reference`` the vector sign is chosen so that Re<reference, v> >= 0.
    """
    if len(sol) == 0:
        raise ValueError("empty spectrum")
    i = int(np.argmin(np.abs(sol.eigenvalues - target)))
    v = sol.eigenvectors[:, i]
    if reference is not None and np.real(np.vdot(reference, v)) < 0:
        v = -v
    return Eigenpair(i, float(sol.eigenvalues[i]), v)


def infsup_indicator(sol, mu: float) -> float:
    """min over eigenvalues ν of |ν - μ| / (1 + |ν|)."""
    ev = sol.eigenvalues if isinstance(sol, EigenSolution) else np.asarray(sol, dtype=float)
    if ev.size == 0:
        return float("inf")
    return float(np.min(np.abs(ev - mu) / (1.0 + np.abs(ev))))


# --- band structure -----------------------------------------------------------

@dataclass(frozen=True)
class Gap:
    index: int
    lower_band: int
    alpha: float
    beta: float

    @property
    def width(self) -> float:
        return self.beta - self.alpha

    @property
    def center(self) -> float:
        return 0.5 * (self.alpha + self.beta)


@dataclass(frozen=True, eq=False)
class BandStructure:
    qs: np.ndarray
    energies: np.ndarray  # (len(qs), n_bands)
    band_min: np.ndarray
    band_max: np.ndarray
    gaps: list[Gap]
    unit_cell_modes: int
    resolution_delta: float
    resolution_ok: bool

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]

    def first_gap(self) -> Optional[Gap]:
        return self.gaps[0] if self.gaps else None


def _band_energy(vper, modes, band, q):
    return scipy.linalg.eigvalsh(assemble_bloch(q, modes, vper).matrix,
                                 subset_by_index=[band, band])[0]


def _golden_min(f, a, b, tol):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best = min(((fc, c), (fd, d), (f(a), a), (f(b), b)))
    return best[1], best[0]


def _refine_extremum(f, qs, i, sign, tol):
    """Golden-section refinement of min (sign=+1) or max (sign=-1) around grid point i."""
    lo = qs[max(i - 1, 0)]
    hi = qs[min(i + 1, qs.size - 1)]
    _, val = _golden_min(lambda q: sign * f(q), lo, hi, tol)
    return sign * val


def band_structure(vper: PeriodicPotential, unit_cell_modes: int = 64, q_count: int = 129,
                   n_bands: int = 6, refine: bool = True, q_tol: float = 1e-6,
                   gap_tol: float = 1e-6, resolution_tol: float = 1e-8) -> BandStructure:
    """Bands of -d²/dx² + V_per from Bloch fibers on a uniform q-grid including ±π/ℓ.

    The resolution check compares the tracked bands against a run with 8 more
    unit-cell modes; ``resolution_ok`` is False when they differ by more than
    ``resolution_tol``.
    """
    if q_count < 16:
        raise ValueError("q_count must be >= 16")
    if n_bands < 1 or n_bands > 2 * unit_cell_modes + 1:
        raise ValueError("n_bands out of range for the fiber dimension")
    kappa = 2.0 * np.pi / vper.period
    qs = np.linspace(-kappa / 2, kappa / 2, q_count)
    energies = np.empty((q_count, n_bands))
    finer = np.empty((q_count, n_bands))
    for i, q in enumerate(qs):
        energies[i] = scipy.linalg.eigvalsh(assemble_bloch(q, unit_cell_modes, vper).matrix,
                                            subset_by_index=[0, n_bands - 1])
        finer[i] = scipy.linalg.eigvalsh(assemble_bloch(q, unit_cell_modes + 8, vper).matrix,
                                         subset_by_index=[0, n_bands - 1])
    delta = float(np.abs(energies - finer).max())
    ok = delta < resolution_tol
    if not ok:
        logger.warning("band resolution check failed: max change %.3e with +8 modes", delta)

    band_min = energies.min(axis=0)
    band_max = energies.max(axis=0)
    if refine:
        for j in range(n_bands):
            f = lambda q, j=j: _band_energy(vper, unit_cell_modes, j, q)
            band_min[j] = min(band_min[j], _refine_extremum(f, qs, int(np.argmin(energies[:, j])), 1.0, q_tol))
            band_max[j] = max(band_max[j], _refine_extremum(f, qs, int(np.argmax(energies[:, j])), -1.0, q_tol))

    gaps = []
    for j in range(n_bands - 1):
        if band_min[j + 1] - band_max[j] > gap_tol:
            gaps.append(Gap(len(gaps) + 1, j + 1, float(band_max[j]), float(band_min[j + 1])))
    return BandStructure(qs, energies, band_min, band_max, gaps, unit_cell_modes, delta, ok)


# --- pollution diagnostics ----------------------------------------------------

@dataclass(frozen=True)
class GapReport:
    gap: Gap
    margin: float
    center: float
    tolerance: float
    eigenvalues: tuple = ()
    classes: tuple = ()

    @property
    def candidates(self) -> list[float]:
        return [e for e, c in zip(self.eigenvalues, self.classes) if c == "defect-candidate"]

    @property
    def suspects(self) -> list[float]:
        return [e for e, c in zip(self.eigenvalues, self.classes) if c == "suspect"]

    @property
    def polluted(self) -> bool:
        return bool(self.suspects)


def pollution_report(band, sol, defect_center: float, margin: float,
                     tolerance: float = 0.1, gap_index: int = 1) -> GapReport:
    """Classify eigenvalues inside (α + margin, β - margin).

    ``band`` is a BandStructure (gap chosen by ``gap_index``) or a Gap. ``sol`` is
    an EigenSolution or a plain array of eigenvalues.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    gap = band if isinstance(band, Gap) else next(g for g in band.gaps if g.index == gap_index)
    ev = sol.eigenvalues if isinstance(sol, EigenSolution) else np.sort(np.asarray(sol, dtype=float))
    inside = ev[(ev > gap.alpha + margin) & (ev < gap.beta - margin)]
    classes = tuple("defect-candidate" if abs(e - defect_center) <= tolerance else "suspect" for e in inside)
    return GapReport(gap, margin, defect_center, tolerance, tuple(float(e) for e in inside), classes)
