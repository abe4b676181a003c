"""Roadside-unit coverage planning with the dominant path model."""

from .antenna import AntennaPattern, PatternKind, RadioConfig
from .calibration import (
    CwCalibration,
    FitMetrics,
    MeasurementSample,
    ModuleCalibration,
    ModuleSweepRow,
    apply_cw_calibration,
    apply_module_calibration,
    cw_offset,
    evaluate_metrics,
    fit_exponents,
    module_offset,
)
from .coverage import (
    Calibrations,
    CoverageGrid,
    CoverageReport,
    Region,
    check_coverage,
    coverage_boundary_distance,
    simulate_grid,
    simulate_trajectory,
)
from .errors import PlanningError
from .propagation import (
    CALIBRATED_PARAMS,
    DEFAULT_PARAMS,
    DominantPath,
    PathLossParams,
    Transmitter,
    dpm_pl,
    dpm_pl_many,
    find_dominant_path,
    free_space_pl,
    received_power,
)
from .scene import (
    Material,
    Obstacle,
    ObstacleKind,
    Scene,
    TerrainGrid,
    VisibilityClass,
    classify_visibility,
    segment_blocked_3d,
    terrain_height_at,
)

__version__ = "0.1.0"

__all__ = [
    "CALIBRATED_PARAMS",
    "DEFAULT_PARAMS",
    "AntennaPattern",
    "PatternKind",
    "RadioConfig",
    "Calibrations",
    "CoverageGrid",
    "CoverageReport",
    "CwCalibration",
    "DominantPath",
    "FitMetrics",
    "Material",
    "MeasurementSample",
    "ModuleCalibration",
    "ModuleSweepRow",
    "Obstacle",
    "ObstacleKind",
    "PathLossParams",
    "PlanningError",
    "Region",
    "Scene",
    "TerrainGrid",
    "Transmitter",
    "VisibilityClass",
    "apply_cw_calibration",
    "apply_module_calibration",
    "check_coverage",
    "classify_visibility",
    "coverage_boundary_distance",
    "cw_offset",
    "dpm_pl",
    "dpm_pl_many",
    "evaluate_metrics",
    "find_dominant_path",
    "fit_exponents",
    "free_space_pl",
    "module_offset",
    "received_power",
    "segment_blocked_3d",
    "simulate_grid",
    "simulate_trajectory",
    "terrain_height_at",
]
