"""Command line frontend: simulate, calibrate, evaluate, plan.

Exit codes: 0 success, 2 input errors (missing/unparsable/empty files,
locked output directory), 3 geometry errors, 4 numeric/domain errors.
Failures print one JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .calibration import (
    MeasurementSample,
    SampleKind,
    align_samples,
    compare_samples,
    cw_offset,
    evaluate_metrics,
    fit_exponents,
    module_offset,
)
from .coverage import (
    Calibrations,
    check_coverage,
    coverage_report,
    route_summary,
    simulate_grid,
    simulate_trajectory,
)
from .errors import EXIT_INPUT, EXIT_OK, EmptyInput, InputError, PlanningError
from .propagation import PathLossParams
from .scene import VisibilityClass

LOCK_NAME = ".rsuplan.lock"


@contextlib.contextmanager
def output_lock(out: Path):
    """Exclusive lock file; a second run against the same directory fails fast."""
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise InputError(f"output directory is locked by another run: {lock}", str(lock)) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out
    finally:
        lock.unlink(missing_ok=True)


def _write_all(out: Path, files: dict[str, str]) -> None:
    with output_lock(out):
        for name in sorted(files):
            io.atomic_write(out / name, files[name])


def _load(args) -> io.ProjectConfig:
    cfg = io.load_config(args.config, args.out)
    if args.cell_size is not None:
        cfg = replace(cfg, cell_size_m=args.cell_size)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    if cfg.output_dir is None:
        cfg = replace(cfg, output_dir=Path("out"))
    return cfg


def _calibration_for(args, cfg: io.ProjectConfig) -> tuple[Calibrations, PathLossParams]:
    """Calibration record from ``--calibration`` or the config; fitted exponents override the config."""
    path = getattr(args, "calibration", None)
    if path is None and cfg.calibration.record is not None and cfg.calibration.record.is_file():
        path = cfg.calibration.record
    if path is None:
        return Calibrations(), cfg.params
    cal, exps = io.read_calibration(path)
    params = cfg.params if not exps else replace(cfg.params, **{k: float(v) for k, v in exps.items()})
    return cal, params


def _progress(enabled: bool):
    if not enabled:
        return None
    state = {"pct": -1}

    def report(done: int, total: int) -> None:
        pct = 100 * done // total
        if pct != state["pct"]:
            state["pct"] = pct
            print(f"progress {done}/{total}", file=sys.stderr)

    return report


def _simulate_site(cfg, tx, cal, params, progress=None):
    """Grid, trajectory records and report for one transmitter site."""
    files = {}
    grid = None
    if cfg.region is not None:
        grid = simulate_grid(
            cfg.scene, tx, cfg.rx, params, cal, cfg.region, cfg.cell_size_m, cfg.threads, progress
        )
        files[f"{tx.name}_grid.csv"] = io.grid_csv(grid)
        files[f"{tx.name}_grid.geojson"] = io.grid_geojson(grid)
    routes = {}
    for route in cfg.trajectories:
        recs = simulate_trajectory(cfg.scene, tx, cfg.rx, params, cal, route.points)
        cov = [r.path_found and check_coverage(r.power_dbm, cfg.rx, cal.module) for r in recs]
        files[f"{tx.name}_{route.name}_trajectory.csv"] = io.trajectory_csv(recs, cov)
        routes[route.name] = recs
    return grid, routes, files


def _site_summary(cfg, tx, cal, grid, routes) -> dict:
    doc = {"tx": tx.name, "position_m": list(tx.position)}
    if grid is not None:
        first = next(iter(routes.values()), None)
        doc["grid"] = coverage_report(grid, cfg.rx, cal.module, first, tx.name).to_dict()
    doc["routes"] = {name: route_summary(recs, cfg.rx, cal.module) for name, recs in routes.items()}
    return doc


def cmd_simulate(args) -> int:
    cfg = _load(args)
    cal, params = _calibration_for(args, cfg)
    if cfg.region is None and not cfg.trajectories:
        raise InputError("config defines neither a region nor trajectories", str(cfg.path))
    files = {}
    summary = {"sites": []}
    for tx in cfg.transmitters:
        grid, routes, f = _simulate_site(cfg, tx, cal, params, _progress(args.progress))
        files.update(f)
        summary["sites"].append(_site_summary(cfg, tx, cal, grid, routes))
    files["summary.json"] = io.dump_json(summary)
    _write_all(cfg.output_dir, files)
    return EXIT_OK


def _aligned_samples(cfg, samples, report: dict) -> list[MeasurementSample]:
    """Snap samples to the nearest trajectory point within the gate; drop the rest."""
    sim_xy = [p for route in cfg.trajectories for p in route.points]
    if not sim_xy:
        report.update(matched=len(samples), unmatched=0, unmatched_samples=[])
        return list(samples)
    idx = align_samples(sim_xy, [s.position for s in samples], cfg.calibration.gate_m)
    kept, dropped = [], []
    for i, (s, k) in enumerate(zip(samples, idx)):
        if k < 0:
            dropped.append(i)
        else:
            kept.append(replace(s, position=tuple(sim_xy[k])))
    report.update(matched=len(kept), unmatched=len(dropped), unmatched_samples=dropped)
    return kept


def _pl_pairs(cmp_, offsets: np.ndarray | None = None) -> list:
    """Path-loss triples; offsets raise simulated power and so lower simulated loss."""
    sim = cmp_.simulated_db if offsets is None else cmp_.simulated_db - offsets
    return [(float(s), float(m), VisibilityClass.from_code(c)) for s, m, c in zip(sim, cmp_.measured_db, cmp_.visibility)]


def _samples_of(path, kind: SampleKind, geo, what: str) -> list[MeasurementSample]:
    samples = [s for s in io.read_measurement_log(path, geo) if s.kind is kind]
    if not samples:
        raise EmptyInput(f"{what} contains no {kind.value} samples", str(path))
    return samples


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    cal_setup = cfg.calibration
    cw_path = args.cw_log or cal_setup.cw_log
    sweep_path = args.sweep_log or cal_setup.sweep_log
    if cw_path is None:
        raise InputError("no CW log given (--cw-log or calibration.cw_log)", str(cfg.path))
    samples = _samples_of(Path(cw_path), SampleKind.CW, cfg.geo_origin, "CW log")
    rows = io.read_sweep_log(Path(sweep_path)) if sweep_path is not None else None
    tx = cfg.transmitter(cal_setup.tx_name)
    align = {}
    samples = _aligned_samples(cfg, samples, align)
    if not samples:
        raise EmptyInput("no CW sample lies within the alignment gate", str(cw_path))

    before = compare_samples(cfg.scene, tx, cfg.rx, samples, cfg.params)
    params = cfg.params
    if cal_setup.fit_grid:
        params = fit_exponents(cfg.scene, tx, cfg.rx, samples, cal_setup.fit_grid, cfg.params)
    fitted = compare_samples(cfg.scene, tx, cfg.rx, samples, params)
    classes = [VisibilityClass.from_code(c) for c in fitted.visibility] if cal_setup.per_class else None
    cw = cw_offset(np.column_stack([fitted.measured_db, fitted.simulated_db]), cal_setup.weight, classes)
    module = module_offset(rows) if rows is not None else None
    cal = Calibrations(cw, module)
    offsets = np.array([cw.offset_for(VisibilityClass.from_code(c)) for c in fitted.visibility])

    m_before = evaluate_metrics(_pl_pairs(before))
    m_after = evaluate_metrics(_pl_pairs(fitted, offsets))
    record = io.calibration_to_dict(
        cal,
        params if cal_setup.fit_grid else None,
        {"tx": tx.name, "alignment": align, "metrics": {"standard": m_before.to_dict(), "calibrated": m_after.to_dict()}},
    )
    report = io.metrics_table(m_before, "standard simulation vs. CW measurement") + "\n"
    report += io.metrics_table(m_after, "calibrated simulation vs. CW measurement")
    report += f"\nCW offset [dB]: {io.fmt(cw.offset_db)} (W = {cw.weight:g}, K = {cw.sample_count})\n"
    if module is not None:
        report += f"module offset [dB]: {io.fmt(module.offset_db)} (M = {module.rows_used})\n"
    report += f"unmatched samples: {align['unmatched']}\n"
    _write_all(cfg.output_dir, {"calibration.json": io.dump_json(record), "metrics_calibrate.txt": report})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    service_path = args.service_log or cfg.calibration.service_log
    if service_path is None:
        raise InputError("no service log given (--service-log or calibration.service_log)", str(cfg.path))
    if args.calibration is None and cfg.calibration.record is None:
        raise InputError("no calibration record given (--calibration or calibration.record)", str(cfg.path))
    cal, params = _calibration_for(args, cfg)
    samples = _samples_of(Path(service_path), SampleKind.SERVICE, cfg.geo_origin, "service log")
    tx = cfg.transmitter(cfg.calibration.tx_name)
    align = {}
    samples = _aligned_samples(cfg, samples, align)
    if not samples:
        raise EmptyInput("no service sample lies within the alignment gate", str(service_path))
    cmp_ = compare_samples(cfg.scene, tx, cfg.rx, samples, params)
    offsets = cal.offsets(cmp_.visibility)
    metrics = evaluate_metrics(_pl_pairs(cmp_, offsets))
    report = io.metrics_table(metrics, "module calibrated simulation vs. service measurement")
    report += f"unmatched samples: {align['unmatched']}\n"
    doc = {"tx": tx.name, "alignment": align, "metrics": metrics.to_dict()}
    _write_all(cfg.output_dir, {"metrics_evaluate.txt": report, "metrics_evaluate.json": io.dump_json(doc)})
    return EXIT_OK


def rank_candidates(reports: list[dict]) -> list[dict]:
    """Order by covered fraction (desc), then smaller threshold margin, then config order."""

    def key(item):
        i, rep = item
        margin = rep["margin_db"]
        return (-rep["covered_fraction"], float("inf") if margin is None else margin, i)

    return [rep for _, rep in sorted(enumerate(reports), key=key)]


def cmd_plan(args) -> int:
    cfg = _load(args)
    if cfg.region is None:
        raise InputError("plan needs a region", str(cfg.path))
    cal, params = _calibration_for(args, cfg)
    reports = []
    for tx in cfg.transmitters:
        grid = simulate_grid(cfg.scene, tx, cfg.rx, params, cal, cfg.region, cfg.cell_size_m, cfg.threads, _progress(args.progress))
        recs = None
        if cfg.trajectories:
            recs = simulate_trajectory(cfg.scene, tx, cfg.rx, params, cal, cfg.trajectories[0].points)
        rep = coverage_report(grid, cfg.rx, cal.module, recs, tx.name).to_dict()
        rep["position_m"] = list(tx.position)
        reports.append(rep)
    ranked = rank_candidates(reports)
    for rank, rep in enumerate(ranked, start=1):
        rep["rank"] = rank
    lines = [f"{'rank':>4}  {'tx':<16}{'covered':>10}{'boundary_m':>12}{'margin_db':>11}{'undersupplied':>15}"]
    for rep in ranked:
        lines.append(
            f"{rep['rank']:>4}  {rep['tx']:<16}{io.fmt(rep['covered_fraction'], 4):>10}"
            f"{io.fmt(rep['boundary_distance_m'], 1) or 'absent':>12}{io.fmt(rep['margin_db'], 2) or 'absent':>11}"
            f"{rep['undersupplied_cell_count']:>15}"
        )
    _write_all(cfg.output_dir, {"plan.json": io.dump_json({"candidates": ranked}), "plan.txt": "\n".join(lines) + "\n"})
    return EXIT_OK


def cmd_synthesize(args) -> int:
    """Write a synthetic measurement log from the simulation (for test data)."""
    cfg = _load(args)
    cal, params = _calibration_for(args, cfg)
    if not cfg.trajectories:
        raise InputError("synthesize needs at least one trajectory", str(cfg.path))
    tx = cfg.transmitter(cfg.calibration.tx_name)
    rng = np.random.default_rng(args.seed)
    kind = SampleKind(args.kind.upper())
    lines = ["timestamp,x_m,y_m,rss_dbm,kind,tx_power_dbm"]
    n = 0
    for route in cfg.trajectories:
        recs = simulate_trajectory(cfg.scene, tx, cfg.rx, params, cal if kind is SampleKind.SERVICE else Calibrations(), route.points)
        for rec in recs:
            if not rec.path_found:
                continue
            rss = rec.power_dbm - args.pl_bias_db + (rng.normal(0.0, args.noise_db) if args.noise_db > 0 else 0.0)
            lines.append(f"{n},{io.fmt(rec.x_m, 3)},{io.fmt(rec.y_m, 3)},{rss:.10f},{kind.value},{io.fmt(tx.config.tx_power_dbm)}")
            n += 1
    _write_all(cfg.output_dir, {args.name: "\n".join(lines) + "\n"})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="project config (YAML)")
    common.add_argument("--out", type=Path, default=None, help="output directory (overrides config output_dir)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for grid evaluation")
    common.add_argument("--cell-size", type=float, default=None, help="grid cell size in meters")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic data helpers")
    common.add_argument("--progress", action="store_true", help="report completed cells on stderr")

    parser = argparse.ArgumentParser(prog="rsuplan", description="RSU coverage planning with the dominant path model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="coverage grid and trajectory exports")
    p.add_argument("--calibration", type=Path, help="calibration record (JSON)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="CW and module calibration")
    p.add_argument("--cw-log", type=Path)
    p.add_argument("--sweep-log", type=Path)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", parents=[common], help="metrics of the calibrated simulation vs service log")
    p.add_argument("--calibration", type=Path)
    p.add_argument("--service-log", type=Path)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plan", parents=[common], help="rank candidate transmitter sites")
    p.add_argument("--calibration", type=Path)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("synthesize", parents=[common], help="synthetic measurement log along the trajectories")
    p.add_argument("--calibration", type=Path)
    p.add_argument("--kind", choices=["CW", "SERVICE", "cw", "service"], default="CW")
    p.add_argument("--pl-bias-db", type=float, default=0.0, help="added to the simulated path loss")
    p.add_argument("--noise-db", type=float, default=0.0, help="Gaussian noise SD in dB")
    p.add_argument("--name", default="synthetic_log.csv")
    p.set_defaults(func=cmd_synthesize)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print(json.dumps({"code": "InputError", "message": "--threads must be >= 1", "path": None}), file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except PlanningError as exc:
        print(json.dumps(exc.to_record(), sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        record = {"code": "InputError", "message": exc.strerror or str(exc), "path": exc.filename}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
