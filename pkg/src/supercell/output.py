"""
CSV schemas, run manifests and the study figures.

Floats are written as ``%.12e`` (locale independent); missing values as ``nan``.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_text
from .harness import ConvergenceRecord, StudyConfig
from .svg import Series, write_chart

RECORD_COLUMNS = ["L", "N_L", "M_L", "lambda", "abs_err_lambda", "rel_err_lambda", "err_l2", "err_h1", "flag"]
BANDS_COLUMNS = ["q", "band_index", "energy"]
GAPS_COLUMNS = ["gap_index", "alpha", "beta"]
SPECTRUM_COLUMNS = ["index", "eigenvalue", "in_gap"]
DEFECT_COLUMNS = ["lambda", "residual", "window_count"]
SPECTRA_COLUMNS = ["L", "N_L", "eigenvalue"]


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12e}"


def _write(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_records(path, records) -> Path:
    rows = [[r.L, r.N_L, r.m_label, fmt(r.lam), fmt(r.abs_err), fmt(r.rel_err), fmt(r.err_l2), fmt(r.err_h1),
             r.flag] for r in records]
    return _write(path, RECORD_COLUMNS, rows)


def read_records(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ConvergenceRecord(int(row["L"]), int(row["N_L"]),
                                  None if row["M_L"] == "Exact" else int(row["M_L"]),
                                  float(row["lambda"]), float(row["abs_err_lambda"]),
                                  float(row["rel_err_lambda"]), float(row["err_l2"]), float(row["err_h1"]),
                                  row["flag"])
                for row in reader]


def write_bands(path, bands) -> Path:
    rows = [[fmt(q), j + 1, fmt(bands.energies[i, j])]
            for i, q in enumerate(bands.qs) for j in range(bands.n_bands)]
    return _write(path, BANDS_COLUMNS, rows)


def write_gaps(path, gaps) -> Path:
    return _write(path, GAPS_COLUMNS, [[g.index, fmt(g.alpha), fmt(g.beta)] for g in gaps])


def write_spectrum(path, eigenvalues, in_gap) -> Path:
    return _write(path, SPECTRUM_COLUMNS, [[i, fmt(e), int(bool(f))] for i, (e, f) in enumerate(zip(eigenvalues, in_gap))])


def write_defect(path, rows) -> Path:
    return _write(path, DEFECT_COLUMNS, [[fmt(lam), fmt(res), count] for lam, res, count in rows])


def write_spectra(path, spectra: dict) -> Path:
    rows = [[L, n, fmt(e)] for (L, n) in sorted(spectra) for e in spectra[(L, n)]]
    return _write(path, SPECTRA_COLUMNS, rows)


def read_spectra(path) -> dict:
    out = defaultdict(list)
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["L"]), int(row["N_L"]))].append(float(row["eigenvalue"]))
    return {k: np.array(v) for k, v in out.items()}


# --- manifest -----------------------------------------------------------------

def now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunManifest:
    config: StudyConfig
    subcommand: str
    started: str
    finished: str = ""
    files: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    timings: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [config_to_text(self.config).rstrip("\n"), "", "[run]",
                 "tool = supercell", f"version = {__version__}", f"subcommand = {self.subcommand}",
                 f"started = {self.started}", f"finished = {self.finished}"]
        lines += [f"{k} = {v}" for k, v in self.info.items()]
        lines += ["", "[files]"]
        lines += [f"file_{i + 1} = {name}" for i, name in enumerate(self.files)]
        if self.timings:
            lines += ["", "[timing]"]
            lines += [f"record_{i + 1} = {t}" for i, t in enumerate(self.timings)]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.ini"
        if "manifest.ini" not in self.files:
            self.files.append("manifest.ini")
        self.finished = self.finished or now()
        path.write_text(self.to_text(), encoding="utf-8")
        return path


def read_manifest_run(path) -> dict:
    import configparser
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read(path, encoding="utf-8")
    return dict(parser.items("run")) if parser.has_section("run") else {}


# --- figures ------------------------------------------------------------------

def figure_spectrum(path, spectra: dict, title: str = "Supercell spectrum in [1, 2]") -> Path:
    by_n = defaultdict(lambda: ([], []))
    for (L, n), ev in sorted(spectra.items()):
        xs, ys = by_n[n // L]
        xs.extend([L] * len(ev))
        ys.extend(float(e) for e in ev)
    series = [Series(f"N = {N}", xs, ys, "markers") for N, (xs, ys) in sorted(by_n.items())]
    return write_chart(path, series, title, "L", "eigenvalue")


def figure_size_errors(path, records, lambda_ref: float, ref_norms) -> Path:
    """log10 relative eigenvalue error and squared relative L²/H¹ errors against L."""
    rows = sorted((r for r in records if r.ok), key=lambda r: (r.N, r.L))
    l2ref, h1ref = ref_norms
    series = []
    ns = sorted({r.N for r in rows})
    for N in ns:
        sel = [r for r in rows if r.N == N]
        xs = [r.L for r in sel]
        suffix = f" (N={N})" if len(ns) > 1 else ""
        series.append(Series("Eigenvalue" + suffix, xs, [r.abs_err / abs(lambda_ref) for r in sel], "both"))
        series.append(Series("Error L2" + suffix, xs, [r.err_l2 ** 2 / l2ref ** 2 for r in sel], "both"))
        series.append(Series("Error H1" + suffix, xs, [r.err_h1 ** 2 / h1ref ** 2 for r in sel], "both"))
    return write_chart(path, series, "Error against supercell size", "L", "relative error", ylog=True)


QUAD_FIGURES = (
    ("fig3_eigenvalue", "abs_err", "|lambda_{L,N,M} - lambda_L|"),
    ("fig4_l2", "err_l2", "L2 eigenvector error"),
    ("fig5_h1", "err_h1", "H1 eigenvector error"),
)


def figures_quadrature(out_dir, records, M_list) -> list:
    """One chart per error quantity and per L: error against N, one curve per M plus exact integration."""
    out_dir = Path(out_dir)
    paths = []
    for L in sorted({r.L for r in records}):
        rows = [r for r in records if r.L == L and r.ok]
        for stem, attr, label in QUAD_FIGURES:
            series = []
            for M in list(M_list) + [None]:
                sel = sorted((r for r in rows if (r.M_L is None if M is None else r.M_L == M * L)),
                             key=lambda r: r.N)
                name = "Exact (M=inf)" if M is None else f"M = {M}"
                series.append(Series(name, [r.N for r in sel], [getattr(r, attr) for r in sel], "both"))
            paths.append(write_chart(out_dir / f"{stem}_L{L}.svg", series, f"{label}, L = {L}", "N", label,
                                     xlog=True, ylog=True))
    return paths
