"""
Command line interface.

    supercell bands             band structure and gaps of the periodic operator
    supercell solve             one supercell eigenproblem and its gap eigenvalues
    supercell study-size        error against supercell size L (exact integration)
    supercell study-quadrature  error of interpolated integration against exact integration
    supercell report            redraw figures and rates from a study directory

Exit codes: 0 ok, 1 every study point failed, 2 configuration error,
3 band resolution check failed, 4 no eigenvalue inside the gap.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .assembly import QuadratureWarning, assemble_exact, assemble_interpolated
from .config import ConfigError, load_config, parse_config
from .harness import (StudyConfig, StudyError, fit_rate, paper_scale, run_quadrature_study, run_size_study,
                      size_rates)
from .output import (RunManifest, figure_size_errors, figure_spectrum, figures_quadrature, now, read_manifest_run,
                     read_records, read_spectra, write_bands, write_defect, write_gaps, write_records,
                     write_spectra, write_spectrum)
from .spectra import band_structure, eigh, window

logger = logging.getLogger("supercell")

EXIT_FAILED, EXIT_CONFIG, EXIT_RESOLUTION, EXIT_NO_DEFECT = 1, 2, 3, 4


def _int_list(text: str) -> tuple:
    try:
        values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return values


def _pair(text: str) -> tuple:
    values = _int_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected L,N, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--vper", choices=["abs_sin", "zero"], help="periodic potential")
    common.add_argument("--vper-scale", type=float, help="factor applied to the periodic potential")
    common.add_argument("--defect", choices=["exp", "zero"], help="defect potential")
    common.add_argument("--defect-scale", type=float, help="factor applied to the defect potential")
    common.add_argument("-v", "--verbose", action="store_true")

    study = argparse.ArgumentParser(add_help=False)
    study.add_argument("--L", type=_int_list, help="supercell sizes, comma separated")
    study.add_argument("--N", type=_int_list, help="mode multipliers (N_L = N*L), comma separated")
    study.add_argument("--M", type=_int_list, help="grid multipliers (M_L = M*L), comma separated")
    study.add_argument("--reference", type=_pair, help="reference run as L_ref,N_ref (N_ref = total mode bound)")
    study.add_argument("--grid-h", type=float, help="spacing of the real-line error grid")
    study.add_argument("--paper-scale", action="store_true", help="reference L=40 with 1400 modes, L up to 18")
    study.add_argument("--baseline", choices=["same", "finest"], help="exact-integration baseline of the quadrature study")
    study.add_argument("--workers", type=int, help="parallel study jobs")

    p = argparse.ArgumentParser(prog="supercell", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bands", parents=[common], help="band structure and gaps")
    b.add_argument("--modes", type=int, help="unit-cell mode bound")
    b.add_argument("--q-count", type=int, help="number of q points including both zone edges")

    s = sub.add_parser("solve", parents=[common], help="solve one supercell problem")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--N", type=int, required=True, help="mode multiplier, N_L = N*L")
    s.add_argument("--M", type=int, help="grid multiplier for interpolated integration, M_L = M*L")

    sub.add_parser("study-size", parents=[common, study], help="convergence in the supercell size")
    sub.add_parser("study-quadrature", parents=[common, study], help="effect of interpolated integration")

    r = sub.add_parser("report", help="redraw figures and print fitted rates")
    r.add_argument("--out", type=Path, required=True, help="study output directory")
    r.add_argument("-v", "--verbose", action="store_true")
    return p


def _resolve_config(args) -> StudyConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else StudyConfig()
    if getattr(args, "paper_scale", False):
        cfg = paper_scale(cfg)
    updates = {}
    for attr, name in (("vper", "vper"), ("vper_scale", "vper_scale"), ("defect", "defect"),
                       ("defect_scale", "defect_scale"), ("grid_h", "grid_h"), ("baseline", "baseline"),
                       ("workers", "workers"), ("reference", "reference"), ("modes", "unit_cell_modes"),
                       ("q_count", "q_count")):
        value = getattr(args, attr, None)
        if value is not None:
            updates[name] = value
    if args.command.startswith("study"):
        if args.L is not None and not args.L:
            raise ConfigError("--L: empty list of supercell sizes")
        if args.L is not None:
            updates["L_list"] = args.L
        if args.N is not None:
            updates["quadrature_N_list" if args.command == "study-quadrature" else "N_list"] = args.N
        if args.M is not None:
            updates["M_list"] = args.M
        if args.L is not None and args.reference is None and not args.paper_scale and args.L:
            # keep the reference valid when only the studied sizes change
            L_ref, N_ref = updates.get("reference", cfg.reference)
            if L_ref < max(args.L):
                raise ConfigError(f"--L: reference L={L_ref} is smaller than max(L)={max(args.L)}")
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = str(args.out)
    try:
        return dataclasses.replace(cfg, **updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_bands(cfg: StudyConfig, args) -> int:
    out = Path(cfg.out_dir)
    manifest = RunManifest(cfg, "bands", now())
    vper, _ = cfg.potentials()
    bands = band_structure(vper, cfg.unit_cell_modes, cfg.q_count, cfg.n_bands)
    out.mkdir(parents=True, exist_ok=True)
    write_bands(out / "bands.csv", bands)
    write_gaps(out / "gaps.csv", bands.gaps)
    manifest.files += ["bands.csv", "gaps.csv"]
    manifest.info["resolution_delta"] = f"{bands.resolution_delta:.3e}"
    manifest.write(out)
    gap = bands.first_gap()
    if gap is None:
        print("no gaps found")
    else:
        print(f"first gap: alpha = {gap.alpha:.6f}  beta = {gap.beta:.6f}  (between bands "
              f"{gap.lower_band} and {gap.lower_band + 1})")
    if not bands.resolution_ok:
        print(f"error: band resolution check failed (change {bands.resolution_delta:.3e} with +8 modes)",
              file=sys.stderr)
        return EXIT_RESOLUTION
    return 0


def cmd_solve(cfg: StudyConfig, args) -> int:
    out = Path(cfg.out_dir)
    manifest = RunManifest(cfg, "solve", now())
    vper, defect = cfg.potentials()
    bands = band_structure(vper, cfg.unit_cell_modes, cfg.q_count, cfg.n_bands)
    gap = next((g for g in bands.gaps if g.index == cfg.gap_index), None)
    if gap is None:
        print("no gaps found", file=sys.stderr)
        return EXIT_NO_DEFECT
    nmodes = args.N * args.L
    if args.M is None:
        op = assemble_exact(args.L, nmodes, vper, defect)
    else:
        op = assemble_interpolated(args.L, nmodes, args.M * args.L, vper, defect, transform=cfg.transform)
    sol = eigh(op)
    lo, hi = gap.alpha + cfg.margin, gap.beta - cfg.margin
    in_gap = (sol.eigenvalues > lo) & (sol.eigenvalues < hi)
    out.mkdir(parents=True, exist_ok=True)
    write_spectrum(out / "spectrum.csv", sol.eigenvalues, in_gap)
    inside = window(sol, lo, hi) if lo < hi else []
    write_defect(out / "defect.csv", [(p.value, sol.residuals[p.index], len(inside)) for p in inside])
    manifest.files += ["spectrum.csv", "defect.csv"]
    manifest.info.update(L=args.L, N_L=nmodes, M_L="Exact" if args.M is None else args.M * args.L,
                         alpha=f"{gap.alpha:.12e}", beta=f"{gap.beta:.12e}")
    manifest.write(out)
    print(f"{op.label()}  gap ({gap.alpha:.6f}, {gap.beta:.6f})  margin {cfg.margin}")
    if not inside:
        print("no eigenvalue inside the gap", file=sys.stderr)
        return EXIT_NO_DEFECT
    best = min(inside, key=lambda p: (abs(p.value - gap.center), p.value))
    print(f"lambda = {best.value:.10f}  residual = {sol.residuals[best.index]:.2e}  "
          f"gap-interior eigenvalues = {len(inside)}")
    return 0


def _study_outputs(result, out: Path, manifest: RunManifest):
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "records.csv", result.records)
    write_spectra(out / "spectra.csv", result.spectra)
    manifest.files += ["records.csv", "spectra.csv"]
    manifest.info.update(lambda_ref=f"{result.lambda_ref:.12e}", ref_norm_l2=f"{result.ref_norms[0]:.12e}",
                         ref_norm_h1=f"{result.ref_norms[1]:.12e}", grid_h=repr(result.grid_h),
                         alpha=f"{result.gap.alpha:.12e}", beta=f"{result.gap.beta:.12e}")
    manifest.timings = [f"L={r.L} N_L={r.N_L} M_L={r.m_label} wall_time={r.wall_time:.4f}"
                        for r in result.records]
    manifest.files += _figures(result.kind, out, result.records, result.spectra, result.lambda_ref,
                               result.ref_norms, result.config.M_list)


def _figures(kind, out, records, spectra, lambda_ref, ref_norms, M_list) -> list:
    paths = []
    if kind == "size":
        paths.append(figure_spectrum(out / "fig1_spectrum.svg", spectra))
        paths.append(figure_size_errors(out / "fig2_size_errors.svg", records, lambda_ref, ref_norms))
    else:
        paths += figures_quadrature(out, records, M_list)
    return [p.name for p in paths]


def _print_records(records):
    print(f"{'L':>4} {'N_L':>6} {'M_L':>7} {'lambda':>14} {'|dlambda|':>11} {'err_L2':>11} {'err_H1':>11}  flag")
    for r in records:
        print(f"{r.L:>4} {r.N_L:>6} {r.m_label:>7} {r.lam:>14.10f} {r.abs_err:>11.3e} {r.err_l2:>11.3e} "
              f"{r.err_h1:>11.3e}  {r.flag}")


def _print_size_rates(records):
    for N in sorted({r.N for r in records if r.ok}):
        try:
            rates = size_rates(records, N)
        except ValueError:
            continue
        print(f"N={N}: slope log10|dlambda| vs L = {rates.lam[0]:.4f} (r2 {rates.lam[2]:.4f}); "
              f"L2 {rates.l2[0]:.4f}; H1 {rates.h1[0]:.4f}; ratio {rates.doubling_ratio:.3f}")


def _print_quadrature_rates(records):
    for L in sorted({r.L for r in records}):
        for N in sorted({r.N for r in records if r.L == L}):
            sel = sorted((r for r in records if r.L == L and r.N == N and r.M_L is not None and r.ok
                          and r.abs_err > 0), key=lambda r: r.M_L)
            if len(sel) >= 3:
                slope, _, r2 = fit_rate(np.log10([r.M_L for r in sel]), np.log10([r.abs_err for r in sel]))
                print(f"L={L} N={N}: slope log10|dlambda| vs log10 M_L = {slope:.3f} (r2 {r2:.3f})")


def cmd_study(cfg: StudyConfig, args) -> int:
    out = Path(cfg.out_dir)
    manifest = RunManifest(cfg, args.command, now())
    if args.command == "study-size":
        result = run_size_study(cfg)
    else:
        result = run_quadrature_study(cfg)
    _study_outputs(result, out, manifest)
    manifest.write(out)
    _print_records(result.records)
    if result.kind == "size":
        _print_size_rates(result.records)
    else:
        _print_quadrature_rates(result.records)
    failed = [r for r in result.records if not r.ok]
    for r in failed:
        print(f"warning: L={r.L} N_L={r.N_L} M_L={r.m_label}: {r.flag}", file=sys.stderr)
    if failed and len(failed) == len(result.records):
        return EXIT_FAILED
    return 0


def cmd_report(args) -> int:
    out = args.out
    run = read_manifest_run(out / "manifest.ini")
    if not run:
        print(f"error: {out / 'manifest.ini'} missing or without [run] section", file=sys.stderr)
        return EXIT_CONFIG
    records = read_records(out / "records.csv")
    kind = "size" if run.get("subcommand") == "study-size" else "quadrature"
    spectra = read_spectra(out / "spectra.csv") if (out / "spectra.csv").exists() else {}
    cfg = parse_config((out / "manifest.ini").read_text(encoding="utf-8"), str(out / "manifest.ini"),
                       extra_sections=("run", "files", "timing"))
    ref_norms = (float(run.get("ref_norm_l2", "nan")), float(run.get("ref_norm_h1", "nan")))
    names = _figures(kind, out, records, spectra, float(run.get("lambda_ref", "nan")), ref_norms, cfg.M_list)
    _print_records(records)
    if kind == "size":
        _print_size_rates(records)
    else:
        _print_quadrature_rates(records)
    print("figures: " + ", ".join(names))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default", QuadratureWarning)
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = _resolve_config(args)
        if args.command == "bands":
            return cmd_bands(cfg, args)
        if args.command == "solve":
            if args.L < 1 or args.N < 1 or (args.M is not None and args.M < 1):
                raise ConfigError("--L, --N and --M must be positive")
            return cmd_solve(cfg, args)
        return cmd_study(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StudyError as exc:
        print(f"study error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
