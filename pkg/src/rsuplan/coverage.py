"""Coverage rasters, trajectories and the sensitivity criterion.

A receiver position is covered when its fully calibrated simulated level
(CW offset plus module offset) exceeds the module sensitivity shifted by the
module offset. Cells or points without any dominant path are reported as
uncovered with no power instead of aborting the run.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .antenna import RadioConfig
from .calibration import CwCalibration, ModuleCalibration
from .errors import DomainError, EmptyInput
from .propagation import (
    PathLossBreakdown,
    PathLossParams,
    Transmitter,
    make_solver,
    received_power_many,
    receiver_points,
)
from .scene import Scene, VisibilityClass

TILE_CELLS = 16384


@dataclass(frozen=True)
class Calibrations:
    cw: CwCalibration | None = None
    module: ModuleCalibration | None = None

    @property
    def module_offset_db(self) -> float:
        return 0.0 if self.module is None else self.module.offset_db

    def offsets(self, codes: np.ndarray) -> np.ndarray:
        """Total additive offset for each visibility class code."""
        out = np.full(len(codes), self.module_offset_db)
        if self.cw is not None:
            table = np.array([self.cw.offset_for(v) for v in VisibilityClass])
            out = table[codes] + out
        return out


NO_CALIBRATION = Calibrations()


def coverage_threshold(rx: RadioConfig, module_cal: ModuleCalibration | None) -> float:
    if rx.sensitivity_dbm is None:
        raise DomainError("receiver sensitivity_dbm is not configured")
    return rx.sensitivity_dbm + (0.0 if module_cal is None else module_cal.offset_db)


def check_coverage(p_sim_cal_module_dbm: float, rx: RadioConfig, module_cal: ModuleCalibration | None) -> bool:
    """Strict sensitivity test on a module-calibrated simulated level."""
    return bool(p_sim_cal_module_dbm > coverage_threshold(rx, module_cal))


@dataclass(frozen=True)
class Region:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DomainError("region must have positive extent")

    def shape(self, cell_size: float) -> tuple[int, int]:
        nx = max(1, int(math.ceil((self.x_max - self.x_min) / cell_size - 1e-9)))
        ny = max(1, int(math.ceil((self.y_max - self.y_min) / cell_size - 1e-9)))
        return ny, nx


@dataclass(eq=False)
class CoverageGrid:
    """Per-cell results; arrays are indexed ``[row, col]`` with row 0 at ``y_min``."""

    origin: tuple
    cell_size_m: float
    p_r_dbm: np.ndarray
    visibility: np.ndarray
    distance_m: np.ndarray
    covered: np.ndarray
    path_found: np.ndarray
    threshold_dbm: float
    path_loss_db: np.ndarray | None = None
    breakdown: dict | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_r_dbm.shape

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.cell_size_m
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.cell_size_m
        return np.meshgrid(xs, ys)


def _tiles(n: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def simulate_grid(
    scene: Scene,
    tx: Transmitter,
    rx: RadioConfig,
    params: PathLossParams,
    calibrations: Calibrations,
    region: Region,
    cell_size: float = 5.0,
    workers: int = 1,
    progress: Callable[[int, int], None] | None = None,
    keep_breakdown: bool = False,
) -> CoverageGrid:
    """Evaluate every cell centre of ``region`` at receiver height.

    Cells are processed in independent tiles, so results are bit-identical
    for any worker count. ``progress(done, total)`` sees a monotone counter.
    """
    if not cell_size > 0:
        raise DomainError("cell_size must be > 0")
    ny, nx = region.shape(cell_size)
    xs = region.x_min + (np.arange(nx) + 0.5) * cell_size
    ys = region.y_min + (np.arange(ny) + 0.5) * cell_size
    gx, gy = np.meshgrid(xs, ys)
    pts = receiver_points(scene, np.column_stack([gx.ravel(), gy.ravel()]), rx)
    solver = make_solver(scene, tx, rx, params)
    n = len(pts)
    power = np.full(n, np.nan)
    pl = np.full(n, np.nan)
    codes = np.zeros(n, dtype=np.int8)
    dist = np.zeros(n)
    found = np.zeros(n, dtype=bool)
    terms = {k: np.full(n, np.nan) for k in ("distance_term_db", "interaction_term_db", "waveguiding_db")} if keep_breakdown else None
    lock = threading.Lock()
    done = [0]

    def run(span):
        s, e = span
        links = received_power_many(solver, tx, rx, pts[s:e], params)
        power[s:e] = links.power_dbm
        pl[s:e] = links.paths.total_db
        codes[s:e] = links.visibility
        dist[s:e] = links.distance_m
        found[s:e] = links.found
        if terms is not None:
            terms["distance_term_db"][s:e] = links.paths.distance_term_db
            terms["interaction_term_db"][s:e] = links.paths.interaction_db
            terms["waveguiding_db"][s:e] = links.paths.waveguiding_db
        if progress is not None:
            with lock:
                done[0] += e - s
                progress(done[0], n)

    spans = _tiles(n, TILE_CELLS)
    if workers <= 1:
        for span in spans:
            run(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, spans))

    power = np.where(found, power + calibrations.offsets(codes), np.nan)
    threshold = coverage_threshold(rx, calibrations.module)
    covered = found & (power > threshold)
    if terms is not None:
        terms = {k: v.reshape(ny, nx) for k, v in terms.items()}
        terms["free_space_reference_db"] = solver.fs_ref
    return CoverageGrid(
        origin=(region.x_min, region.y_min),
        cell_size_m=cell_size,
        p_r_dbm=power.reshape(ny, nx),
        visibility=codes.reshape(ny, nx),
        distance_m=dist.reshape(ny, nx),
        covered=covered.reshape(ny, nx),
        path_found=found.reshape(ny, nx),
        threshold_dbm=threshold,
        path_loss_db=pl.reshape(ny, nx),
        breakdown=terms,
    )


@dataclass(frozen=True)
class TrajectoryRecord:
    index: int
    x_m: float
    y_m: float
    along_m: float
    distance_m: float
    visibility: VisibilityClass
    path_found: bool
    power_dbm: float | None
    raw_power_dbm: float | None
    breakdown: PathLossBreakdown | None
    n_interactions: int = 0


def simulate_trajectory(
    scene: Scene,
    tx: Transmitter,
    rx: RadioConfig,
    params: PathLossParams,
    calibrations: Calibrations,
    points: Sequence,
) -> list[TrajectoryRecord]:
    """Per-point calibrated level and loss breakdown along an ordered route."""
    xy = np.atleast_2d(np.asarray(points, dtype=float))
    if xy.size == 0:
        raise EmptyInput("trajectory needs at least one point")
    xy = xy[:, :2]
    pts = receiver_points(scene, xy, rx)
    links = received_power_many(make_solver(scene, tx, rx, params), tx, rx, pts, params)
    offsets = calibrations.offsets(links.visibility)
    steps = np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1]))
    along = np.concatenate([[0.0], np.cumsum(steps)])
    out = []
    for i in range(len(xy)):
        ok = bool(links.found[i])
        raw = float(links.power_dbm[i]) if ok else None
        out.append(
            TrajectoryRecord(
                index=i,
                x_m=float(xy[i, 0]),
                y_m=float(xy[i, 1]),
                along_m=float(along[i]),
                distance_m=float(links.distance_m[i]),
                visibility=VisibilityClass.from_code(links.visibility[i]),
                path_found=ok,
                power_dbm=raw + float(offsets[i]) if ok else None,
                raw_power_dbm=raw,
                breakdown=links.paths.breakdown(i) if ok else None,
                n_interactions=int(links.paths.n_interactions[i]),
            )
        )
    return out


def _record_covered(rec: TrajectoryRecord, rx: RadioConfig, module_cal) -> bool:
    return rec.path_found and check_coverage(rec.power_dbm, rx, module_cal)


def coverage_boundary_distance(
    records: Sequence[TrajectoryRecord], rx: RadioConfig, module_cal: ModuleCalibration | None
) -> float | None:
    """Along-route distance of the first record failing the coverage test."""
    if not records:
        raise EmptyInput("no trajectory records")
    for rec in records:
        if not _record_covered(rec, rx, module_cal):
            return rec.along_m
    return None


@dataclass(frozen=True)
class CoverageReport:
    tx_name: str
    covered_fraction: float
    boundary_distance_m: float | None
    undersupplied_cells: tuple
    threshold_dbm: float
    margin_db: float | None
    contiguous_coverage_m: float | None = None
    max_gap_m: float | None = None

    def to_dict(self) -> dict:
        return {
            "tx": self.tx_name,
            "covered_fraction": self.covered_fraction,
            "boundary_distance_m": self.boundary_distance_m,
            "threshold_dbm": self.threshold_dbm,
            "margin_db": self.margin_db,
            "contiguous_coverage_m": self.contiguous_coverage_m,
            "max_gap_m": self.max_gap_m,
            "undersupplied_cell_count": len(self.undersupplied_cells),
            "undersupplied_cells": [list(c) for c in self.undersupplied_cells],
        }


def _run_stats(records, rx, module_cal) -> tuple[float, float]:
    """Longest covered stretch and longest uncovered stretch along a route."""
    best_cov = best_gap = 0.0
    start = None
    state = None
    for rec in records:
        cov = _record_covered(rec, rx, module_cal)
        if cov != state:
            start, state = rec.along_m, cov
        span = rec.along_m - start
        if cov:
            best_cov = max(best_cov, span)
        else:
            best_gap = max(best_gap, span)
    return best_cov, best_gap


def coverage_report(
    grid: CoverageGrid,
    rx: RadioConfig,
    module_cal: ModuleCalibration | None = None,
    records: Sequence[TrajectoryRecord] | None = None,
    tx_name: str = "tx",
) -> CoverageReport:
    """Summarize a grid (and optionally a route) for site comparison.

    ``margin_db`` is the mean excess of covered cells over the threshold.
    """
    covered = grid.covered
    frac = float(np.count_nonzero(covered)) / covered.size
    under = tuple((int(j), int(i)) for j, i in zip(*np.nonzero(~covered)))
    margin = None
    if covered.any():
        margin = float(np.mean(grid.p_r_dbm[covered] - grid.threshold_dbm))
    boundary = contig = gap = None
    if records:
        boundary = coverage_boundary_distance(records, rx, module_cal)
        contig, gap = _run_stats(records, rx, module_cal)
    return CoverageReport(tx_name, frac, boundary, under, grid.threshold_dbm, margin, contig, gap)


def route_summary(records: Sequence[TrajectoryRecord], rx: RadioConfig, module_cal: ModuleCalibration | None) -> dict:
    """Boundary, contiguous coverage and longest gap along one route."""
    contig, gap = _run_stats(records, rx, module_cal)
    return {
        "boundary_distance_m": coverage_boundary_distance(records, rx, module_cal),
        "contiguous_coverage_m": contig,
        "max_gap_m": gap,
        "points": len(records),
        "no_path_points": sum(1 for r in records if not r.path_found),
        "threshold_dbm": coverage_threshold(rx, module_cal),
    }
