"""Command-line entry point: ``leothermal {simulate,check,optimize,verify}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import design
from .config import ConfigError, RunConfig, dump_config, load_config
from .materials import ZERO_CELSIUS
from .mesh import discretize
from .solver import InstabilityError, NonConvergenceError, periodic_steady_state, uniform_field
from .verification import run_verification

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_NOCONVERGE = 0, 1, 2, 3, 4


def fmt(x: float) -> str:
    return format(float(x), ".9g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write_outputs(out_dir: Path, files: dict[str, str], figures: dict | None = None):
    """Write every file via a temp name + rename so a failure leaves no partial file."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, out_dir / name)
    if figures:
        from . import plotting

        for name, fig in figures.items():
            plotting.save(fig, out_dir / name)


def _steady(cfg: RunConfig):
    mesh = discretize(cfg.stack, cfg.solver.node_count)
    s = cfg.solver
    return periodic_steady_state(uniform_field(mesh, s.initial_temp), mesh, cfg.orbit, s.dt, s.tol,
                                 s.max_orbits, s.snapshot_interval, centerline=s.centerline,
                                 cfl_safety=s.cfl_safety)


def profile_csv(history) -> str:
    header = ["time_s"] + [f"T_C@r={fmt(r)}m" for r in history.mesh.node_radii]
    rows = ([fmt(t)] + [fmt(v - ZERO_CELSIUS) for v in row] for t, row in zip(history.times, history.temps))
    return _csv(header, rows)


def heatmap_csv(history) -> str:
    radii = [fmt(r) for r in history.mesh.node_radii]
    rows = ([fmt(t), r, fmt(v - ZERO_CELSIUS)]
            for t, row in zip(history.times, history.temps) for r, v in zip(radii, row))
    return _csv(["time_s", "radius_m", "temp_C"], rows)


def summary_text(cfg: RunConfig, cycle) -> str:
    h = cycle.history
    mesh = h.mesh
    lines = [
        f"nodes: {mesh.node_count}  dr_m: {fmt(mesh.delta_r)}  interface_snap_m: {fmt(mesh.snap_error)}",
        f"orbits_to_convergence: {cycle.orbits_used}  residual_K: {fmt(cycle.residual)}  tol_K: {fmt(cfg.solver.tol)}",
        f"outer_surface_C: min {fmt(h.temps[:, -1].min() - ZERO_CELSIUS)}  max {fmt(h.temps[:, -1].max() - ZERO_CELSIUS)}",
        f"centerline_C: min {fmt(h.temps[:, 0].min() - ZERO_CELSIUS)}  max {fmt(h.temps[:, 0].max() - ZERO_CELSIUS)}",
    ]
    for locus in design.LOCI:
        lines.append(f"layer extremes ({locus}):")
        for ext in design.layer_extremes(h, cfg.stack, locus):
            lines.append(f"  {ext.name}: min_C {fmt(ext.min_temp - ZERO_CELSIUS)}  max_C {fmt(ext.max_temp - ZERO_CELSIUS)}")
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig, out_dir: Path, figures: bool = False) -> int:
    cycle = _steady(cfg)
    h = cycle.history
    files = {"profile.csv": profile_csv(h), "heatmap.csv": heatmap_csv(h), "summary.txt": summary_text(cfg, cycle)}
    figs = None
    if figures:
        from . import plotting

        figs = {"profile.png": plotting.radial_profiles(h), "heatmap.png": plotting.time_radius_map(h),
                "cross_sections.png": plotting.cross_sections(h)}
    _write_outputs(out_dir, files, figs)
    print(files["summary.txt"], end="")
    return EXIT_OK


def safety_csv(report) -> str:
    c = ZERO_CELSIUS
    rows = ([v.name, fmt(v.observed_min - c), fmt(v.observed_max - c), fmt(v.cold_bound - c), fmt(v.hot_bound - c),
             v.cold_ok, v.hot_ok, v.passed, fmt(v.violation)] for v in report.layers)
    return _csv(["layer", "observed_min_C", "observed_max_C", "cold_bound_C", "hot_bound_C",
                 "cold_ok", "hot_ok", "pass", "violation_K"], rows)


def render_report(report, locus: str) -> str:
    c = ZERO_CELSIUS
    lines = [f"safety factor {report.safety_factor:g}, locus {locus}"]
    for v in report.layers:
        lines.append(
            f"  {v.name:<10} observed [{v.observed_min - c:8.2f}, {v.observed_max - c:8.2f}] C   "
            f"allowed [{v.cold_bound - c:8.2f}, {v.hot_bound - c:8.2f}] C   "
            f"{'PASS' if v.passed else 'FAIL'}"
            + ("" if v.passed else f" (cold {'ok' if v.cold_ok else 'violated'}, hot {'ok' if v.hot_ok else 'violated'})")
        )
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def cmd_check(cfg: RunConfig, out_dir: Path, figures: bool = False) -> int:
    cycle = _steady(cfg)
    ext = design.layer_extremes(cycle.history, cfg.stack, cfg.design.locus)
    report = design.check_safety(ext, cfg.stack, cfg.design.safety_factor)
    figs = None
    if figures:
        from . import plotting

        figs = {"safety.png": plotting.safety_bars(report)}
    _write_outputs(out_dir, {"safety.csv": safety_csv(report)}, figs)
    print(render_report(report, cfg.design.locus), end="")
    return EXIT_OK if report.passed else EXIT_FAIL


def candidates_csv(result, names) -> str:
    header = [f"{n}_fraction" for n in names] + ["feasible", "objective_fraction", "worst_violation_K",
                                                 "total_violation_K", "orbits"]
    rows = ([fmt(f) for f in c.fractions] + [c.feasible, fmt(c.objective), fmt(c.worst_violation),
                                             fmt(c.total_violation), c.orbits_used] for c in result.candidates)
    return _csv(header, rows)


def best_text(result, names, cfg: RunConfig) -> str:
    d = cfg.design
    lines = [f"grid_step {fmt(d.grid_step)}  min_fraction {fmt(d.min_fraction)}  safety_factor {fmt(d.safety_factor)}  "
             f"locus {d.locus}",
             f"grid candidates: {result.grid_count}  total evaluated: {len(result.candidates)}"]
    if result.best is not None:
        chosen, status = result.best, "feasible"
    else:
        chosen, status = result.closest, "INFEASIBLE (closest candidate shown)"
    lines.append(f"status: {status}")
    lines += [f"  {n}: {fmt(f)}" for n, f in zip(names, chosen.fractions)]
    lines.append(f"objective_fraction: {fmt(chosen.objective)}  total_violation_K: {fmt(chosen.total_violation)}")
    if result.recheck is not None:
        lines.append(f"full-fidelity recheck ({cfg.solver.node_count} nodes): "
                     f"{'pass' if result.recheck.feasible else 'fail'}")
    if chosen.report is not None:
        lines.append(render_report(chosen.report, d.locus).rstrip())
    return "\n".join(lines) + "\n"


def cmd_optimize(cfg: RunConfig, out_dir: Path, figures: bool = False) -> int:
    d = cfg.design
    candidate_params = replace(cfg.solver, node_count=d.candidate_node_count, tol=d.candidate_tol, dt=None)
    full = cfg.solver
    result = design.optimize_fractions(cfg.stack, cfg.orbit, candidate_params, d.min_fraction, d.grid_step,
                                       d.safety_factor, d.locus, full_fidelity=full, workers=d.workers,
                                       refine=d.refine)
    names = cfg.stack.names
    files = {"candidates.csv": candidates_csv(result, names), "best.txt": best_text(result, names, cfg)}
    figs = None
    if figures:
        from . import plotting

        figs = {"candidates.png": plotting.candidate_scatter(result)}
    _write_outputs(out_dir, files, figs)
    print(files["best.txt"], end="")
    return EXIT_OK if result.feasible else EXIT_FAIL


def cmd_verify(cfg: RunConfig, out_dir: Path | None = None, figures: bool = False) -> int:
    report = run_verification(cfg.solver.node_count)
    text = "\n".join(report.lines()) + f"\noverall: {'PASS' if report.passed else 'FAIL'}\n"
    if out_dir is not None:
        _write_outputs(out_dir, {"verify.txt": text})
    print(text, end="")
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "check": cmd_check, "optimize": cmd_optimize, "verify": cmd_verify}
HELP = {
    "simulate": "converged orbit cycle -> profile.csv, heatmap.csv, summary.txt",
    "check": "safety-factor check of the configured stack -> safety.csv (exit 1 on fail)",
    "optimize": "grid search over layer fractions -> candidates.csv, best.txt (exit 1 if infeasible)",
    "verify": "solver verification suite (exit 1 if any check fails)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leothermal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", type=Path, help="TOML config file (defaults: the built-in four-layer setup)")
        p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set any config field, e.g. solver.node_count=101 or 'materials.TPU.hot_limit=\"150 C\"'")
        p.add_argument("--dump-config", action="store_true", help="print the resolved config as TOML and exit")
        p.add_argument("--figures", action="store_true", help="also render PNG figures into the output directory")
    return parser


def _error(kind: str, code: int, message: str, **extra) -> int:
    payload = {"error": kind, "exit": code, "message": message, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
    except ConfigError as exc:
        return _error("config", EXIT_CONFIG, exc.detail, line=exc.line,
                      file=str(args.config) if args.config else None)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    out_dir = args.out if args.out is not None else Path(cfg.output_dir)
    try:
        return COMMANDS[args.command](cfg, out_dir, args.figures)
    except InstabilityError as exc:
        return _error("instability", EXIT_UNSTABLE, str(exc), step=exc.step, node=exc.node, time_s=exc.time)
    except NonConvergenceError as exc:
        return _error("nonconvergence", EXIT_NOCONVERGE, str(exc), residual_K=exc.residual, orbits=exc.orbits)


if __name__ == "__main__":
    sys.exit(main())
