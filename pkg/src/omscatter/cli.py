"""Command-line front end.

Subcommands: spectrum, diagonal, resonances, fc-table, oracle-compare,
preset, sweep.  Every run writes CSV/JSON data with full provenance and, by
default, renders matching PNG figures alongside.  Exit codes: 0 success,
2 validation error, 3 convergence failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io, presets, plots
from .fock import fc_table
from .params import (
    ConfigError,
    ConvergenceError,
    MechanicalInitState,
    Truncation,
)
from .spectrum import diagonal_spectrum, resonance_lines, spectrum_grid
from . import timedomain as td

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def _load_config(args) -> io.RunConfig:
    cfg = None
    if getattr(args, "config", None):
        cfg = io.read_config(args.config)
    if getattr(args, "preset", None):
        if cfg is not None:
            raise ConfigError("give either --config or --preset, not both")
        try:
            cfg = presets.build(args.preset)
        except KeyError as exc:
            raise ConfigError(f"preset: {exc.args[0]}") from None
    if cfg is None:
        raise ConfigError("a --config file or --preset id is required")
    if getattr(args, "trunc", None):
        cfg = dataclasses.replace(
            cfg, truncation=dataclasses.replace(
                cfg.truncation, j_max=args.trunc, fock_max=args.trunc
            )
        )
    return cfg


def _stem(cfg: io.RunConfig, base: str) -> str:
    return f"{cfg.preset_id}_{base}" if cfg.preset_id else base


def job_spectrum(cfg: io.RunConfig, out: Path, *, tolerance=5e-3, threads=1, figures=True):
    if cfg.grid is None:
        raise ConfigError("grid: section required for a spectrum job")
    written = []
    for label, spec in (("spectrum", cfg.grid), ("zoom", cfg.zoom)):
        if spec is None:
            continue
        axis = spec.axis()
        grid = spectrum_grid(
            axis, axis, cfg.state, cfg.model, cfg.wavepacket,
            trunc=cfg.truncation, convergence_tol=tolerance, threads=threads,
        )
        stem = _stem(cfg, label)
        written.append(io.write_grid(grid, out, stem, cfg, source="analytic"))
        if figures:
            plots.save_grid_figure(grid, out / f"{stem}.png", title=stem)
    return written


def job_diagonal(cfg: io.RunConfig, out: Path, *, figures=True, **_):
    if cfg.diagonal is None:
        raise ConfigError("diagonal: section required for a diagonal job")
    rows = diagonal_spectrum(
        cfg.diagonal.axis(), cfg.state, cfg.model, cfg.wavepacket, trunc=cfg.truncation
    )
    stem = _stem(cfg, "diagonal")
    path = io.write_diagonal(rows, out, stem, cfg, source="analytic")
    if figures:
        plots.save_diagonal_figure(rows, out / f"{stem}.png", title=stem)
    return [path]


def job_resonances(cfg: io.RunConfig, out: Path, *, j_max=8, s_max=8, **_):
    n0 = 0
    if cfg.state.kind == "pure" and sum(1 for w in cfg.state.weights if w != 0) == 1:
        n0 = max(i for i, w in enumerate(cfg.state.weights) if w != 0)
    lines = resonance_lines(cfg.model, n0=n0, j_max=j_max, s_max=s_max)
    return [io.write_resonances(lines, out, _stem(cfg, "resonances"), cfg)]


def job_fc_table(cfg: io.RunConfig, out: Path, *, max_index=None, **_):
    idx = max_index if max_index is not None else cfg.truncation.table_index
    table = fc_table(cfg.model, idx)
    return [io.write_fc_table(table, out, _stem(cfg, "fc_table"), cfg)]


def job_oracle_compare(cfg: io.RunConfig, out: Path, *, figures=True, **_):
    """Run the time-domain integration and compare against the closed form."""
    model, wp, spec = cfg.model, cfg.wavepacket, cfg.oracle
    t_final = spec.resolve_t_final(model)
    half_bw = spec.resolve_bandwidth(model, epsilon=wp.epsilon)
    window = spec.resolve_window(model, epsilon=wp.epsilon)
    bath = td.BathGrid.build(model, spec.n_modes, half_bw)

    def run(state_or_n0):
        if isinstance(state_or_n0, int):
            st = td.initialize(wp, state_or_n0, bath, spec.n_b, spec.coverage_min)
        else:
            st = td.initialize_pure(wp, state_or_n0, bath, spec.n_b, spec.coverage_min)
        st = td.evolve(st, model, t_final=t_final, dt=spec.dt)
        return st

    if cfg.state.kind == "pure":
        final = run(cfg.state)
        oracle_grid = td.extract_spectrum(final)
        residual = final.residual()
    else:
        # a statistical mixture is a probability-weighted sum of number-state runs
        vals = None
        residual = 0.0
        for n0, w in enumerate(cfg.state.weights):
            if w == 0:
                continue
            final = run(n0)
            part = td.extract_spectrum(final)
            vals = w.real * part.values if vals is None else vals + w.real * part.values
            residual += w.real * final.residual()
        oracle_grid = dataclasses.replace(part, values=vals)

    sel = (bath.detunings >= window[0]) & (bath.detunings <= window[1])
    axis = bath.detunings[sel]
    analytic = spectrum_grid(
        axis, axis, cfg.state, model, wp, trunc=cfg.truncation, convergence_tol=None
    )
    report = td.compare_grids(oracle_grid, analytic, window, spec.n_bins)
    report.update({
        "residual": residual,
        "t_final": t_final,
        "half_bandwidth": half_bw,
        "n_modes": spec.n_modes,
        "n_b": spec.n_b,
        "recurrence_time": bath.recurrence_time,
    })
    stem = _stem(cfg, "oracle")
    written = [io.write_grid(oracle_grid, out, f"{stem}_spectrum", cfg, source="time-domain")]
    written.append(io.write_comparison(report, out, f"{stem}_comparison", cfg))
    if figures:
        plots.save_comparison_figure(
            analytic, oracle_grid, out / f"{stem}_comparison.png", window,
            title=_stem(cfg, "oracle vs closed form"),
        )
    print(f"oracle-compare: relative L2 {report['l2_rel']:.4f}, "
          f"Linf {report['linf_rel']:.4f}, residual {residual:.2e}")
    return written


_JOBS = {
    "spectrum": job_spectrum,
    "diagonal": job_diagonal,
    "resonances": job_resonances,
    "fc-table": job_fc_table,
    "oracle-compare": job_oracle_compare,
}


def run_config(path: str | Path, out: str | Path, *, figures=True, tolerance=5e-3, threads=1):
    """Execute every job a config file declares (library entry point).

    With no explicit "jobs" list, runs what the config describes: a spectrum
    when a grid is present and a diagonal cut when a diagonal axis is present.
    """
    doc = json.loads(Path(path).read_text())
    cfg = io.config_from_dict(doc)
    jobs = doc.get("jobs")
    if jobs is None:
        jobs = []
        if cfg.grid is not None:
            jobs.append("spectrum")
        if cfg.diagonal is not None:
            jobs.append("diagonal")
        if not jobs:
            raise ConfigError("config: nothing to do (no grid/diagonal section, no jobs list)")
    written = []
    for job in jobs:
        if job not in _JOBS:
            raise ConfigError(f"jobs: unknown job {job!r}")
        written.extend(_JOBS[job](cfg, Path(out), figures=figures,
                                  tolerance=tolerance, threads=threads))
    return written


def run_preset(preset_id: str, out: str | Path, *, figures=True, tolerance=5e-3, threads=1):
    """Execute one preset: grid and/or diagonal per its family, plus figures."""
    try:
        cfg = presets.build(preset_id)
    except KeyError as exc:
        raise ConfigError(f"preset: {exc.args[0]}") from None
    written = []
    if cfg.grid is not None:
        written.extend(job_spectrum(cfg, Path(out), tolerance=tolerance,
                                    threads=threads, figures=figures))
    if cfg.diagonal is not None:
        written.extend(job_diagonal(cfg, Path(out), figures=figures))
    return written


def _set_by_path(doc: dict, dotted: str, value: float):
    known = {
        "model.omega_m", "model.g1", "model.g2", "model.gamma_c", "model.omega_c",
        "wavepacket.delta1", "wavepacket.delta2", "wavepacket.epsilon",
    }
    if dotted not in known:
        raise ConfigError(
            f"sweep.param: {dotted!r} is not a recognized scalar field "
            f"({', '.join(sorted(known))})"
        )
    section, name = dotted.split(".")
    doc.setdefault(section, {})[name] = value


def run_sweep(config_path, param: str, values: list[float], out: Path,
              *, figures=True, tolerance=5e-3, threads=1) -> dict:
    """One run per value; failed points are recorded, not fatal."""
    base_doc = json.loads(Path(config_path).read_text())
    runs = []
    for idx, value in enumerate(values):
        doc = json.loads(json.dumps(base_doc))  # deep copy
        _set_by_path(doc, param, value)
        tag = f"{idx:03d}_{param.split('.')[-1]}={value:g}"
        run_dir = out / tag
        entry = {"index": idx, "value": value, "dir": tag, "config": doc}
        try:
            cfg = io.config_from_dict(doc)
            jobs = doc.get("jobs")
            if jobs is None:
                jobs = (["spectrum"] if cfg.grid else []) + (["diagonal"] if cfg.diagonal else [])
            if not jobs:
                raise ConfigError("config: nothing to do for sweep point")
            for job in jobs:
                _JOBS[job](cfg, run_dir, figures=figures, tolerance=tolerance, threads=threads)
            entry["status"] = "ok"
        except (ConfigError, ConvergenceError) as exc:
            entry["status"] = "failed"
            entry["error"] = str(exc)
        runs.append(entry)
    manifest = {"param": param, "values": list(values), "runs": runs}
    io.write_manifest(manifest, out)
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="omscatter",
        description="Two-photon scattering spectra of a mixed optomechanical cavity",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON run configuration")
            p.add_argument("--preset", help="preset id (fig2a..fig5c)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--trunc", type=int, help="Fock truncation override")
        p.add_argument("--tolerance", type=float, default=5e-3,
                       help="truncation-convergence tolerance")
        p.add_argument("--threads", type=int, default=1, help="evaluation threads")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    common(sub.add_parser("spectrum", help="2D joint spectrum grid"))
    common(sub.add_parser("diagonal", help="spectrum along dp = dq"))
    p = sub.add_parser("resonances", help="predicted emission lines")
    common(p)
    p.add_argument("--j-max", type=int, default=8)
    p.add_argument("--s-max", type=int, default=8)
    p = sub.add_parser("fc-table", help="dump the overlap table as CSV")
    common(p)
    p.add_argument("--max-index", type=int, help="largest Fock index to dump")
    common(sub.add_parser("oracle-compare", help="time-domain validation run"))
    p = sub.add_parser("preset", help="run a bundled preset")
    p.add_argument("id", help="preset id (fig2a..fig5c)")
    common(p, config=False)
    p = sub.add_parser("sweep", help="run a config repeatedly over parameter values")
    common(p)
    p.add_argument("--param", required=True, help="dotted field, e.g. model.g2")
    p.add_argument("--values", required=True,
                   help="comma-separated list, e.g. 0.01,0.05,0.10")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out = Path(args.out)
    figures = not args.no_figures
    try:
        if args.command == "preset":
            run_preset(args.id, out, figures=figures, tolerance=args.tolerance,
                       threads=args.threads)
        elif args.command == "sweep":
            if not args.config:
                raise ConfigError("sweep: --config is required")
            try:
                values = [float(v) for v in args.values.split(",") if v != ""]
            except ValueError:
                raise ConfigError(f"sweep.values: could not parse {args.values!r}") from None
            manifest = run_sweep(args.config, args.param, values, out,
                                 figures=figures, tolerance=args.tolerance,
                                 threads=args.threads)
            if any(r["status"] != "ok" for r in manifest["runs"]):
                return EXIT_CONVERGENCE
        else:
            cfg = _load_config(args)
            job = _JOBS[args.command]
            kwargs = {"figures": figures, "tolerance": args.tolerance,
                      "threads": args.threads}
            if args.command == "resonances":
                kwargs.update(j_max=args.j_max, s_max=args.s_max)
            if args.command == "fc-table":
                kwargs.update(max_index=args.max_index)
            job(cfg, out, **kwargs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
