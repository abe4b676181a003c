"""Two-stage calibration and fit metrics.

Stage one compares simulated path loss with continuous-wave (CW) field
measurements: exponents are grid-fitted per visibility class, then a weighted
mean path-loss difference is added to simulated levels. Stage two offsets
simulated levels by the mean gap between a spectrum analyzer and a radio
module's RSSI recorded over a wired attenuation sweep.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .antenna import RadioConfig
from .errors import DomainError, EmptyInput, NoPathFound
from .propagation import (
    DEFAULT_PARAMS,
    PathLossParams,
    Transmitter,
    make_solver,
    received_power_many,
    receiver_points,
)
from .scene import Scene, VisibilityClass


class SampleKind(str, enum.Enum):
    CW = "CW"
    SERVICE = "SERVICE"


@dataclass(frozen=True)
class MeasurementSample:
    position: tuple
    rss_dbm: float
    kind: SampleKind
    source_tx_power_dbm: float
    timestamp: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SampleKind(self.kind))
        if not math.isfinite(self.rss_dbm):
            raise DomainError("rss_dbm must be finite")


@dataclass(frozen=True)
class ModuleSweepRow:
    attenuation_db: float
    p_spec_dbm: float
    p_module_dbm: float

    def __post_init__(self) -> None:
        if not self.attenuation_db >= 0:
            raise DomainError("attenuation_db must be >= 0")


@dataclass(frozen=True)
class CwCalibration:
    weight: float
    offset_db: float
    sample_count: int
    per_class_offsets: Mapping[VisibilityClass, float] | None = None

    def offset_for(self, visibility: VisibilityClass | None = None) -> float:
        if visibility is not None and self.per_class_offsets:
            return self.per_class_offsets.get(VisibilityClass(visibility), self.offset_db)
        return self.offset_db


@dataclass(frozen=True)
class ModuleCalibration:
    offset_db: float
    rows_used: int


@dataclass(frozen=True)
class ClassMetrics:
    rmse_db: float
    sd_db: float
    bias_db: float
    count: int


@dataclass(frozen=True)
class FitMetrics:
    """RMSE and SD of residuals (simulated minus measured), overall and per class.

    Classes without samples map to ``None``.
    """

    overall: ClassMetrics
    per_class: Mapping[VisibilityClass, ClassMetrics | None] = field(default_factory=dict)

    @property
    def rmse_db(self) -> float:
        return self.overall.rmse_db

    @property
    def sd_db(self) -> float:
        return self.overall.sd_db

    def to_dict(self) -> dict:
        def one(m):
            return None if m is None else {"rmse_db": m.rmse_db, "sd_db": m.sd_db, "bias_db": m.bias_db, "count": m.count}

        out = {"all": one(self.overall)}
        for vis in VisibilityClass:
            out[vis.value] = one(self.per_class.get(vis))
        return out


def cw_offset(pairs: Sequence, weight: float, classes: Sequence | None = None) -> CwCalibration:
    """Weighted mean of ``pl_cw - pl_sim`` over aligned positions.

    ``pairs`` holds ``(pl_cw_db, pl_sim_db)`` tuples. Passing ``classes`` (one
    visibility class per pair) additionally yields per-class offsets.
    """
    if not 0.0 <= weight <= 1.0:
        raise DomainError("weight must lie in [0, 1]")
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    k = len(arr)
    if k == 0:
        raise EmptyInput("cw_offset needs at least one pair")
    diff = arr[:, 0] - arr[:, 1]
    offset = weight / k * float(np.sum(diff))
    per_class = None
    if classes is not None:
        if len(classes) != k:
            raise DomainError("classes must align with pairs")
        labels = [VisibilityClass(c) for c in classes]
        per_class = {}
        for vis in VisibilityClass:
            sel = np.array([c is vis for c in labels])
            if sel.any():
                per_class[vis] = weight / int(sel.sum()) * float(np.sum(diff[sel]))
    return CwCalibration(weight, offset, k, per_class)


def apply_cw_calibration(
    p_sim_dbm, cal: CwCalibration, visibility: VisibilityClass | None = None
):
    return p_sim_dbm + cal.offset_for(visibility)


def module_offset(rows: Iterable[ModuleSweepRow]) -> ModuleCalibration:
    rows = list(rows)
    if not rows:
        raise EmptyInput("module_offset needs at least one sweep row")
    diff = np.array([r.p_spec_dbm - r.p_module_dbm for r in rows])
    return ModuleCalibration(float(np.mean(diff)), len(rows))


def apply_module_calibration(p_sim_cal_dbm, cal: ModuleCalibration):
    return p_sim_cal_dbm + cal.offset_db


def _class_metrics(resid: np.ndarray) -> ClassMetrics:
    bias = float(np.mean(resid))
    rmse = math.sqrt(float(np.mean(resid * resid)))
    sd = math.sqrt(float(np.mean((resid - bias) ** 2)))
    return ClassMetrics(rmse, sd, bias, len(resid))


def evaluate_metrics(pairs: Sequence) -> FitMetrics:
    """Metrics for ``(simulated_db, measured_db, visibility)`` triples.

    The SD is the population form, so ``rmse**2 == bias**2 + sd**2``.
    """
    if len(pairs) == 0:
        raise EmptyInput("evaluate_metrics needs at least one pair")
    sim = np.array([p[0] for p in pairs], dtype=float)
    meas = np.array([p[1] for p in pairs], dtype=float)
    cls = [VisibilityClass(p[2]) for p in pairs]
    resid = sim - meas
    per_class: dict = {}
    for vis in VisibilityClass:
        sel = np.array([c is vis for c in cls])
        per_class[vis] = _class_metrics(resid[sel]) if sel.any() else None
    return FitMetrics(_class_metrics(resid), per_class)


def measured_path_loss(
    rss_dbm,
    source_tx_power_dbm,
    tx_config: RadioConfig,
    rx_config: RadioConfig,
    tx_gain_dbi,
    rx_gain_dbi,
):
    """Invert the link budget: path loss seen by a sample recorded at ``source_tx_power_dbm``.

    The result no longer depends on the transmit power, which normalizes CW
    generator runs and module runs made at different powers.
    """
    return (
        np.asarray(source_tx_power_dbm)
        - tx_config.cable_loss_db
        + tx_gain_dbi
        + rx_gain_dbi
        - rx_config.cable_loss_db
        - np.asarray(rss_dbm)
    )


def _xy(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    return arr.reshape(0, 2) if arr.size == 0 else np.atleast_2d(arr)[:, :2]


def align_samples(sim_xy, sample_xy, gate_m: float = 2.5) -> np.ndarray:
    """Index of the nearest simulation point for each sample, ``-1`` beyond the gate."""
    sim_xy, sample_xy = _xy(sim_xy), _xy(sample_xy)
    if len(sim_xy) == 0 or len(sample_xy) == 0:
        return np.full(len(sample_xy), -1, dtype=np.int64)
    dist, idx = cKDTree(sim_xy).query(sample_xy, k=1)
    return np.where(dist <= gate_m, idx, -1).astype(np.int64)


@dataclass(frozen=True)
class PathLossComparison:
    """Simulated and measured path loss at each usable sample."""

    simulated_db: np.ndarray
    measured_db: np.ndarray
    visibility: np.ndarray  # class codes
    simulated_power_dbm: np.ndarray

    def pairs(self) -> list:
        return [
            (float(s), float(m), VisibilityClass.from_code(c))
            for s, m, c in zip(self.simulated_db, self.measured_db, self.visibility)
        ]


def compare_samples(
    scene: Scene,
    tx: Transmitter,
    rx_config: RadioConfig,
    samples: Sequence[MeasurementSample],
    params: PathLossParams = DEFAULT_PARAMS,
    solver=None,
) -> PathLossComparison:
    """Simulate every sample position and pair simulated with measured path loss."""
    if not samples:
        raise EmptyInput("no measurement samples")
    solver = solver or make_solver(scene, tx, rx_config, params)
    pts = receiver_points(scene, [s.position[:2] for s in samples], rx_config)
    links = received_power_many(solver, tx, rx_config, pts, params)
    if not links.found.all():
        k = int(np.argmin(links.found))
        raise NoPathFound(f"no dominant path to sample at {samples[k].position}")
    meas = measured_path_loss(
        np.array([s.rss_dbm for s in samples]),
        np.array([s.source_tx_power_dbm for s in samples]),
        tx.config,
        rx_config,
        links.tx_gain_dbi,
        links.rx_gain_dbi,
    )
    return PathLossComparison(links.paths.total_db.copy(), meas, links.visibility.copy(), links.power_dbm.copy())


def fit_exponents(
    scene: Scene,
    tx: Transmitter,
    rx_config: RadioConfig,
    samples: Sequence[MeasurementSample],
    grid: Sequence[float] | Mapping[VisibilityClass, Sequence[float]],
    params: PathLossParams = DEFAULT_PARAMS,
) -> PathLossParams:
    """Grid search of per-class exponents minimizing path-loss RMSE.

    Each sample's visibility class is fixed by geometry, so the overall squared
    error separates by class and each exponent is searched on its own. Ties go
    to the smaller exponent; classes without samples keep their exponent.
    """
    if not samples:
        raise EmptyInput("fit_exponents needs samples")
    if isinstance(grid, Mapping):
        grids = {VisibilityClass(k): sorted(float(v) for v in vals) for k, vals in grid.items()}
    else:
        values = sorted(float(v) for v in grid)
        grids = {vis: values for vis in VisibilityClass}
    if any(len(v) == 0 for v in grids.values()):
        raise EmptyInput("empty exponent grid")
    solver = make_solver(scene, tx, rx_config, params)
    base = compare_samples(scene, tx, rx_config, samples, params, solver)
    attr = {VisibilityClass.LOS: "exponent_los", VisibilityClass.OLOS: "exponent_olos", VisibilityClass.NLOS: "exponent_nlos"}
    chosen = {}
    for vis, values in grids.items():
        sel = base.visibility == vis.code
        if not sel.any():
            continue
        subset = [s for s, keep in zip(samples, sel) if keep]
        best = None
        for value in values:
            trial = replace(params, **{attr[vis]: value})
            cmp_ = compare_samples(scene, tx, rx_config, subset, trial, solver)
            sse = float(np.sum((cmp_.simulated_db - cmp_.measured_db) ** 2))
            if best is None or sse < best[0]:
                best = (sse, value)
        chosen[attr[vis]] = best[1]
    return replace(params, **chosen)
