"""Supercell planewave method for defect eigenvalues in spectral gaps of 1D periodic Schrödinger operators."""

from .planewave import (FourierVector, GridField, LatticeSpec, PlanewaveBasis, SamplingGrid, analyze,
                        basis_kvalues, differentiate, interpolate, project, sobolev_norm, synthesize_at,
                        synthesize_on_grid)
from .potentials import (CutoffChi, DefectPotential, PeriodicPotential, TaperXi, abs_sin_potential,
                         exp_defect, zero_defect, zero_periodic)
from .assembly import (BlochFiber, QuadratureWarning, SupercellOperator, assemble_bloch, assemble_exact,
                       assemble_interpolated)
from .spectra import (BandStructure, EigenSolution, GapReport, band_structure, eigh, infsup_indicator,
                      nearest_eigenpair, pollution_report, window)
from .harness import (ConvergenceRecord, StudyConfig, extend, fit_rate, line_error, run_quadrature_study,
                      run_size_study)

__version__ = "0.1.0"
