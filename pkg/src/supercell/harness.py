"""
Convergence studies of the supercell method on the real line.

Supercell eigenvectors are carried to L²(R) by multiplying their periodic
extension with the cutoff χ_L, and compared on a common uniform grid.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .assembly import assemble_exact, assemble_interpolated
from .planewave import FourierVector, PlanewaveBasis, differentiate, synthesize_at
from .potentials import (TWO_PI, CutoffChi, DefectPotential, PeriodicPotential, abs_sin_potential,
                         exp_defect, zero_defect, zero_periodic)
from .spectra import Gap, band_structure, eigh, window

logger = logging.getLogger(__name__)

PERIODIC_POTENTIALS = {"abs_sin": abs_sin_potential, "zero": lambda scale=1.0: zero_periodic()}
DEFECT_POTENTIALS = {"exp": exp_defect, "zero": lambda scale=1.0: zero_defect()}


class StudyError(RuntimeError):
    pass


@dataclass(frozen=True)
class StudyConfig:
    vper: str = "abs_sin"
    vper_scale: float = 1.0
    defect: str = "exp"
    defect_scale: float = 1.0
    L_list: tuple = (6, 8, 10, 12, 14, 16)
    N_list: tuple = (20,)
    quadrature_N_list: tuple = (2, 4, 6, 8, 10, 12, 14)
    M_list: tuple = (56, 112, 224, 448)
    reference: tuple = (20, 400)
    target: float = 1.69
    margin: float = 0.05
    defect_tol: float = 0.1
    grid_h: float = math.pi / 64
    unit_cell_modes: int = 64
    q_count: int = 129
    n_bands: int = 6
    gap_index: int = 1
    baseline: str = "same"
    transform: str = "direct"
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        for name in ("L_list", "N_list", "quadrature_N_list", "M_list", "reference"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.vper not in PERIODIC_POTENTIALS:
            raise ValueError(f"unknown periodic potential {self.vper!r}")
        if self.defect not in DEFECT_POTENTIALS:
            raise ValueError(f"unknown defect potential {self.defect!r}")
        if not self.L_list:
            raise ValueError("L list is empty")
        if len(self.reference) != 2:
            raise ValueError("reference must be a pair L_ref, N_ref")
        for name in ("L_list", "N_list", "quadrature_N_list", "M_list", "reference"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"{name} entries must be positive")
        if self.reference[0] < max(self.L_list):
            raise ValueError("reference L must be >= every studied L")
        if not self.grid_h > 0:
            raise ValueError("grid_h must be positive")
        if self.baseline not in ("same", "finest"):
            raise ValueError("baseline must be 'same' or 'finest'")
        if self.transform not in ("direct", "fft"):
            raise ValueError("transform must be 'direct' or 'fft'")
        if self.margin <= 0 or self.defect_tol <= 0:
            raise ValueError("margin and defect_tol must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def potentials(self) -> tuple[PeriodicPotential, DefectPotential]:
        return (PERIODIC_POTENTIALS[self.vper](self.vper_scale),
                DEFECT_POTENTIALS[self.defect](self.defect_scale))


def paper_scale(cfg: StudyConfig) -> StudyConfig:
    """Full-size reproduction parameters (L up to 18, reference at L=40 with 1400 modes)."""
    return replace(cfg, L_list=(6, 8, 10, 12, 14, 16, 18), N_list=(35,), reference=(40, 1400),
                   quadrature_N_list=(2, 4, 6, 8, 10, 12, 14), M_list=(56, 112, 224, 448))


def compute_gap(cfg: StudyConfig) -> Gap:
    vper, _ = cfg.potentials()
    bands = band_structure(vper, cfg.unit_cell_modes, cfg.q_count, cfg.n_bands)
    for g in bands.gaps:
        if g.index == cfg.gap_index:
            return g
    raise StudyError(f"band structure has no gap number {cfg.gap_index}")


# --- eigenfunctions on the line -----------------------------------------------

@dataclass(frozen=True, eq=False)
class LineGrid:
    """Symmetric uniform grid x = h·j, |x| <= half_width (rounded up to a node)."""

    half_width: float
    h: float

    @property
    def x(self) -> np.ndarray:
        n = int(math.ceil(self.half_width / self.h - 1e-12))
        return self.h * np.arange(-n, n + 1)

    def refined(self) -> LineGrid:
        return LineGrid(self.half_width, self.h / 2)


def reference_grid(L_ref: int, h: float, period: float = TWO_PI) -> LineGrid:
    return LineGrid(period * (L_ref + math.sqrt(L_ref)) / 2, h)


@dataclass(frozen=True, eq=False)
class ExtendedEigenfunction:
    source: tuple  # (L, N_L, M_L or None)
    grid: LineGrid
    values: np.ndarray
    derivs: np.ndarray

    def norms(self) -> tuple[float, float]:
        l2 = np.trapezoid(np.abs(self.values) ** 2, dx=self.grid.h)
        d = np.trapezoid(np.abs(self.derivs) ** 2, dx=self.grid.h)
        return math.sqrt(l2), math.sqrt(l2 + d)

    def __neg__(self) -> ExtendedEigenfunction:
        return ExtendedEigenfunction(self.source, self.grid, -self.values, -self.derivs)


def real_gauge(vec: FourierVector) -> FourierVector:
    """Rotate the phase so the represented function is real when that is possible.

    Eigenvectors of simple eigenvalues of real potentials satisfy
    conj(c(-m)) = e^{iθ} c(m); multiplying by e^{iθ/2} makes the function real.
    The remaining sign is fixed by the pivot (largest) coefficient.
    """
    c = vec.coeffs
    z = np.vdot(c, c[::-1].conj())
    norm2 = np.vdot(c, c).real
    if norm2 == 0:
        return vec
    if abs(z) > 0.5 * norm2:
        c = c * np.exp(0.5j * np.angle(z))
    p = int(np.argmax(np.abs(c)))
    lead = c[p].real if abs(c[p].real) >= abs(c[p].imag) else c[p].imag
    if lead < 0:
        c = -c
    return FourierVector(vec.basis, c)


def extend(u: FourierVector, grid: LineGrid, M: Optional[int] = None) -> ExtendedEigenfunction:
    """Samples of φ = χ_L u and φ' = χ_L' u + χ_L u' on ``grid``, zero outside supp χ_L."""
    L = u.basis.L
    chi = CutoffChi.for_supercell(L, u.basis.lattice.period)
    x = grid.x
    inside = np.abs(x) < chi.outer
    xin = x[inside]
    uu = synthesize_at(u, xin)
    du = synthesize_at(differentiate(u), xin)
    dtype = np.result_type(uu, du)
    values = np.zeros(x.shape, dtype=dtype)
    derivs = np.zeros(x.shape, dtype=dtype)
    values[inside] = chi(xin) * uu
    derivs[inside] = chi.deriv(xin) * uu + chi(xin) * du
    return ExtendedEigenfunction((L, u.basis.nmodes, M), grid, values, derivs)


def _check_same_grid(a: ExtendedEigenfunction, b: ExtendedEigenfunction):
    if a.grid.h != b.grid.h or a.values.shape != b.values.shape or a.grid.half_width != b.grid.half_width:
        raise ValueError("extended eigenfunctions live on different grids")


def line_error(a: ExtendedEigenfunction, b: ExtendedEigenfunction) -> tuple[float, float]:
    """(‖a - b‖_{L²(R)}, ‖a - b‖_{H¹(R)}) by the composite trapezoid rule."""
    _check_same_grid(a, b)
    h = a.grid.h
    l2 = np.trapezoid(np.abs(a.values - b.values) ** 2, dx=h)
    d = np.trapezoid(np.abs(a.derivs - b.derivs) ** 2, dx=h)
    return math.sqrt(l2), math.sqrt(l2 + d)


def align(phi: ExtendedEigenfunction, ref: ExtendedEigenfunction) -> ExtendedEigenfunction:
    """Flip the sign of ``phi`` so that Re ∫ conj(ref) phi >= 0."""
    _check_same_grid(phi, ref)
    overlap = np.trapezoid((np.conj(ref.values) * phi.values).real, dx=phi.grid.h)
    return -phi if overlap < 0 else phi


# --- records ------------------------------------------------------------------

@dataclass
class ConvergenceRecord:
    L: int
    N_L: int
    M_L: Optional[int]
    lam: float
    abs_err: float
    rel_err: float
    err_l2: float
    err_h1: float
    flag: str = "ok"
    wall_time: float = 0.0

    @property
    def m_label(self) -> str:
        return "Exact" if self.M_L is None else str(self.M_L)

    @property
    def N(self) -> int:
        return self.N_L // self.L

    @property
    def ok(self) -> bool:
        return self.flag == "ok"

    def sort_key(self):
        return (self.L, self.N_L, math.inf if self.M_L is None else self.M_L)


@dataclass
class StudyResult:
    kind: str
    config: StudyConfig
    records: list
    gap: Gap
    grid_h: float
    lambda_ref: float
    ref_norms: tuple  # (L², H¹) norms of the baseline/reference φ
    spectra: dict = field(default_factory=dict)  # (L, N_L) -> eigenvalues in [1, 2]


@dataclass(frozen=True, eq=False)
class _Solved:
    L: int
    nmodes: int
    M: Optional[int]
    lam: float
    vector: Optional[FourierVector]
    window_count: int
    spectrum: np.ndarray
    flag: str
    wall_time: float


def _solve(cfg: StudyConfig, gap: Gap, L: int, nmodes: int, M: Optional[int] = None,
           lam_ref: Optional[float] = None) -> _Solved:
    t0 = time.perf_counter()
    vper, defect = cfg.potentials()
    if M is None:
        op = assemble_exact(L, nmodes, vper, defect)
    else:
        op = assemble_interpolated(L, nmodes, M, vper, defect, transform=cfg.transform)
    sol = eigh(op)
    spectrum = sol.eigenvalues[(sol.eigenvalues >= 1.0) & (sol.eigenvalues <= 2.0)].copy()
    # shrink by the margin: folded band edges sit on α and β up to round-off
    in_gap = window(sol, gap.alpha + cfg.margin, gap.beta - cfg.margin)
    if not in_gap:
        return _Solved(L, nmodes, M, math.nan, None, 0, spectrum, "no_gap_eigenvalue",
                       time.perf_counter() - t0)
    best = min(in_gap, key=lambda p: (abs(p.value - cfg.target), p.value))
    center = best.value if lam_ref is None else lam_ref
    eps = min(center - gap.alpha, gap.beta - center)
    count = len(window(sol, center - eps / 2, center + eps / 2))
    flag = "ok" if count == 1 else f"window_count={count}"
    vec = real_gauge(FourierVector(op.basis, best.vector))
    return _Solved(L, nmodes, M, best.value, vec, count, spectrum, flag, time.perf_counter() - t0)


def _run_jobs(cfg: StudyConfig, fn, jobs):
    if cfg.workers == 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _check_grid(ref_u: FourierVector, u: FourierVector, grid: LineGrid, tol: float = 1e-6,
                max_halvings: int = 4) -> LineGrid:
    """Halve h until the L²/H¹ errors change by less than ``tol`` relative."""
    for _ in range(max_halvings + 1):
        fine = grid.refined()
        coarse_err = line_error(align(extend(u, grid), extend(ref_u, grid)), extend(ref_u, grid))
        fine_err = line_error(align(extend(u, fine), extend(ref_u, fine)), extend(ref_u, fine))
        change = max(abs(c - f) / f if f > 0 else abs(c) for c, f in zip(coarse_err, fine_err))
        if change < tol:
            return grid
        logger.warning("error grid h=%.4g not resolved (relative change %.2e); halving", grid.h, change)
        grid = fine
    return grid


def _make_record(s: _Solved, base_lam: float, base_phi: Optional[ExtendedEigenfunction],
                 grid: LineGrid) -> ConvergenceRecord:
    if s.vector is None or base_phi is None:
        return ConvergenceRecord(s.L, s.nmodes, s.M, s.lam, math.nan, math.nan, math.nan, math.nan,
                                 s.flag if s.vector is None else "no_baseline", s.wall_time)
    phi = align(extend(s.vector, grid, s.M), base_phi)
    l2, h1 = line_error(phi, base_phi)
    abs_err = abs(s.lam - base_lam)
    return ConvergenceRecord(s.L, s.nmodes, s.M, s.lam, abs_err, abs_err / abs(base_lam), l2, h1,
                             s.flag, s.wall_time)


def run_size_study(cfg: StudyConfig, gap: Optional[Gap] = None) -> StudyResult:
    """Exact-integration supercell runs for every (L, N) against the (L_ref, N_ref) reference."""
    gap = gap or compute_gap(cfg)
    L_ref, N_ref = cfg.reference
    ref = _solve(cfg, gap, L_ref, N_ref)
    if ref.vector is None:
        raise StudyError(f"reference run L={L_ref} N_L={N_ref} has no eigenvalue in the gap")
    jobs = [(cfg, gap, L, N * L, None, ref.lam) for L in cfg.L_list for N in cfg.N_list]
    solved = _run_jobs(cfg, _solve, jobs)

    grid = reference_grid(L_ref, cfg.grid_h)
    first = next((s for s in solved if s.vector is not None), None)
    if first is not None:
        grid = _check_grid(ref.vector, first.vector, grid)
    ref_phi = extend(ref.vector, grid)
    records = [_make_record(s, ref.lam, ref_phi, grid) for s in solved]
    records.sort(key=ConvergenceRecord.sort_key)
    spectra = {(s.L, s.nmodes): s.spectrum for s in solved}
    return StudyResult("size", cfg, records, gap, grid.h, ref.lam, ref_phi.norms(), spectra)


def run_quadrature_study(cfg: StudyConfig, gap: Optional[Gap] = None) -> StudyResult:
    """Interpolated-integration runs at M_L = M·L against exact integration.

    With ``baseline="same"`` each (L, N) is compared to exact integration at the
    same (L, N); with ``baseline="finest"`` to exact integration at the largest N.
    """
    if not cfg.M_list:
        raise StudyError("quadrature study needs at least one M")
    gap = gap or compute_gap(cfg)
    L_ref, _ = cfg.reference
    grid = reference_grid(L_ref, cfg.grid_h)

    exact_jobs = [(cfg, gap, L, N * L, None) for L in cfg.L_list for N in cfg.quadrature_N_list]
    exact = {(s.L, s.nmodes): s for s in _run_jobs(cfg, _solve, exact_jobs)}
    quad_jobs = [(cfg, gap, L, N * L, M * L) for L in cfg.L_list for N in cfg.quadrature_N_list
                 for M in cfg.M_list]
    quad = _run_jobs(cfg, _solve, quad_jobs)

    n_top = max(cfg.quadrature_N_list)

    def baseline(L, nmodes):
        return exact[(L, n_top * L)] if cfg.baseline == "finest" else exact[(L, nmodes)]

    first = next(((baseline(s.L, s.nmodes), s) for s in quad
                  if s.vector is not None and baseline(s.L, s.nmodes).vector is not None), None)
    if first is not None:
        grid = _check_grid(first[0].vector, first[1].vector, grid)

    base_phi = {}
    for key, s in exact.items():
        if s.vector is not None:
            base_phi[key] = extend(s.vector, grid)

    records = []
    for s in list(exact.values()) + quad:
        b = baseline(s.L, s.nmodes)
        records.append(_make_record(s, b.lam, base_phi.get((b.L, b.nmodes)), grid))
    records.sort(key=ConvergenceRecord.sort_key)
    spectra = {(s.L, s.nmodes): s.spectrum for s in exact.values()}
    last = baseline(cfg.L_list[-1], n_top * cfg.L_list[-1])
    norms = base_phi[(last.L, last.nmodes)].norms() if (last.L, last.nmodes) in base_phi else (math.nan, math.nan)
    return StudyResult("quadrature", cfg, records, gap, grid.h, last.lam, norms, spectra)


# --- rates --------------------------------------------------------------------

def fit_rate(xs, ys_log10) -> tuple[float, float, float]:
    """Least-squares line through (xs, ys_log10); returns (slope, intercept, r²)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys_log10, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if xs.size < 3:
        raise ValueError("at least 3 points are required")
    if np.ptp(xs) == 0:
        raise ValueError("degenerate abscissae: all xs are equal")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    # constant data is fitted exactly by a flat line
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


@dataclass(frozen=True)
class RateSummary:
    lam: tuple
    l2: tuple
    h1: tuple

    @property
    def doubling_ratio(self) -> float:
        return self.lam[0] / self.h1[0]


def size_rates(records, N: Optional[int] = None) -> RateSummary:
    """Fitted (slope, intercept, r²) of log10 errors against L for one N multiplier."""
    rows = [r for r in records if r.ok and r.abs_err > 0 and (N is None or r.N == N)]
    if N is None and rows:
        n0 = rows[0].N
        rows = [r for r in rows if r.N == n0]
    rows.sort(key=lambda r: r.L)
    xs = [r.L for r in rows]
    return RateSummary(fit_rate(xs, np.log10([r.abs_err for r in rows])),
                       fit_rate(xs, np.log10([r.err_l2 for r in rows])),
                       fit_rate(xs, np.log10([r.err_h1 for r in rows])))
