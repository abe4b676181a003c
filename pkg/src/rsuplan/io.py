"""Config, scene and log readers plus deterministic export writers.

Documents are YAML with unit-suffixed keys and a top-level ``format_version``.
Relative paths inside a config resolve against the config file's directory.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .antenna import AntennaPattern, PatternCut, PatternKind, RadioConfig
from .calibration import CwCalibration, MeasurementSample, ModuleCalibration, ModuleSweepRow
from .coverage import Calibrations, CoverageGrid, Region, TrajectoryRecord
from .errors import EmptyInput, InputError, MissingInput, ParseError, PlanningError
from .propagation import LossCurve, PathLossParams, Transmitter
from .scene import Material, Obstacle, ObstacleKind, Scene, TerrainGrid, VisibilityClass

FORMAT_VERSION = 1
DBM_RANGE = (-200.0, 60.0)
EARTH_RADIUS_M = 6_371_008.8


def check_dbm(value: float, what: str, path: str | None = None, line: int | None = None) -> float:
    """Reject dBm values outside the plausible range as likely unit errors."""
    if not (math.isfinite(value) and DBM_RANGE[0] <= value <= DBM_RANGE[1]):
        msg = f"{what} = {value} dBm is outside [{DBM_RANGE[0]:g}, {DBM_RANGE[1]:g}]"
        if line is not None:
            raise ParseError(msg, path, line)
        raise InputError(msg, path)
    return value


def _load_yaml(path: Path) -> dict:
    if not path.is_file():
        raise MissingInput(f"file not found: {path}", str(path))
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}", str(path), line) from None
    if not isinstance(doc, dict):
        raise ParseError("document must be a mapping", str(path))
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})", str(path))
    return doc


class _Reader:
    """Typed access to one mapping of a YAML document with path-aware errors."""

    def __init__(self, data: Any, where: str, path: Path) -> None:
        if not isinstance(data, dict):
            raise ParseError(f"{where} must be a mapping", str(path))
        self.data = data
        self.where = where
        self.path = path

    def _fail(self, key: str, msg: str):
        raise ParseError(f"{self.where}.{key}: {msg}", str(self.path))

    def has(self, key: str) -> bool:
        return self.data.get(key) is not None

    def raw(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    def num(self, key: str, default: Any = ..., dbm: bool = False) -> float | None:
        if key not in self.data or self.data[key] is None:
            if default is ...:
                self._fail(key, "required")
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            self._fail(key, f"expected a number, got {value!r}")
        try:
            # YAML 1.1 reads exponent forms such as 5.9e9 as strings
            value = float(value)
        except ValueError:
            self._fail(key, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            self._fail(key, "must be finite")
        if dbm:
            try:
                check_dbm(value, f"{self.where}.{key}")
            except InputError as exc:
                raise ParseError(exc.message, str(self.path)) from None
        return value

    def text(self, key: str, default: Any = ...) -> str | None:
        if key not in self.data or self.data[key] is None:
            if default is ...:
                self._fail(key, "required")
            return default
        return str(self.data[key])

    def points(self, key: str, default: Any = ...) -> list[tuple[float, float]] | None:
        if key not in self.data:
            if default is ...:
                self._fail(key, "required")
            return default
        try:
            arr = np.asarray(self.data[key], dtype=float)
        except (TypeError, ValueError):
            self._fail(key, "expected a list of [x, y] pairs")
        if arr.ndim != 2 or arr.shape[1] != 2:
            self._fail(key, "expected a list of [x, y] pairs")
        return [(float(x), float(y)) for x, y in arr]

    def point(self, key: str) -> tuple[float, float]:
        value = self.data.get(key)
        try:
            x, y = (float(v) for v in value)
        except (TypeError, ValueError):
            self._fail(key, "expected [x, y]")
        return (x, y)

    def sub(self, key: str) -> "_Reader | None":
        if self.data.get(key) is None:
            return None
        return _Reader(self.data[key], f"{self.where}.{key}", self.path)

    def file(self, key: str, base: Path, required: bool = False) -> Path | None:
        value = self.data.get(key)
        if value is None:
            if required:
                self._fail(key, "required")
            return None
        p = Path(value)
        if not p.is_absolute():
            p = base / p
        if not p.is_file():
            raise MissingInput(f"{self.where}.{key}: file not found: {p}", str(p))
        return p


def _wrap(fn, path: Path):
    try:
        return fn()
    except PlanningError:
        raise
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), str(path)) from None


# -- scene ----------------------------------------------------------------


def load_scene(path: str | Path) -> Scene:
    path = Path(path)
    doc = _Reader(_load_yaml(path), "scene", path)
    materials = []
    for i, m in enumerate(doc.raw("materials") or []):
        r = _Reader(m, f"materials[{i}]", path)
        materials.append(
            _wrap(
                lambda: Material(
                    r.text("name"),
                    r.num("relative_permittivity", 1.0),
                    r.num("reflection_loss_db", 0.0),
                ),
                path,
            )
        )
    terrain = None
    t = doc.sub("terrain")
    if t is not None:
        origin = t.raw("origin_m", [0.0, 0.0])
        if t.has("heights_path"):
            heights = _read_height_csv(t.file("heights_path", path.parent))
        else:
            heights = t.raw("heights_m")
        terrain = _wrap(lambda: TerrainGrid(tuple(origin), t.num("cell_size_m"), np.asarray(heights, dtype=float)), path)
    obstacles = []
    for i, o in enumerate(doc.raw("obstacles") or []):
        r = _Reader(o, f"obstacles[{i}]", path)
        hard = r.raw("hard_blocker")
        obstacles.append(
            _wrap(
                lambda: Obstacle(
                    tuple(r.points("footprint_m")),
                    r.num("base_height_m", 0.0),
                    r.num("top_height_m"),
                    r.text("material"),
                    ObstacleKind(str(r.raw("kind", "BUILDING")).upper()),
                    None if hard is None else bool(hard),
                ),
                path,
            )
        )
    try:
        return Scene(obstacles, materials, terrain)
    except PlanningError as exc:
        exc.path = exc.path or str(path)
        raise


def _read_height_csv(path: Path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(v) for v in line.replace(",", " ").split()])
        except ValueError:
            raise ParseError(f"non-numeric height row {line!r}", str(path), lineno) from None
        if len(rows[-1]) != len(rows[0]):
            raise ParseError("height rows must have equal length", str(path), lineno)
    if not rows:
        raise EmptyInput("terrain height file is empty", str(path))
    return np.array(rows)


# -- project config ---------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    name: str
    points: tuple

    @classmethod
    def line(cls, name: str, start, end, spacing_m: float) -> "Trajectory":
        """Equidistant points from ``start`` towards ``end`` (end included if on grid)."""
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        length = float(np.hypot(*(end - start)))
        n = int(math.floor(length / spacing_m + 1e-9))
        ts = np.arange(n + 1) * spacing_m / length if length > 0 else np.zeros(1)
        pts = start + ts[:, None] * (end - start)
        return cls(name, tuple((float(x), float(y)) for x, y in pts))


@dataclass(frozen=True)
class GeoOrigin:
    lat_deg: float
    lon_deg: float

    def project(self, lat, lon) -> tuple[np.ndarray, np.ndarray]:
        """Equirectangular projection onto a local tangent plane (x east, y north)."""
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        x = np.radians(lon - self.lon_deg) * EARTH_RADIUS_M * math.cos(math.radians(self.lat_deg))
        y = np.radians(lat - self.lat_deg) * EARTH_RADIUS_M
        return x, y


@dataclass(frozen=True)
class CalibrationSetup:
    cw_log: Path | None = None
    sweep_log: Path | None = None
    service_log: Path | None = None
    record: Path | None = None
    weight: float = 0.25
    per_class: bool = False
    gate_m: float = 2.5
    fit_grid: tuple | None = None
    tx_name: str | None = None


@dataclass(frozen=True)
class ProjectConfig:
    path: Path
    scene_path: Path
    scene: Scene
    transmitters: tuple
    rx: RadioConfig
    params: PathLossParams
    region: Region | None
    cell_size_m: float
    trajectories: tuple
    calibration: CalibrationSetup
    geo_origin: GeoOrigin | None
    output_dir: Path | None
    threads: int = 1
    keep_breakdown: bool = False
    extra: dict = field(default_factory=dict)

    def transmitter(self, name: str | None = None) -> Transmitter:
        if name is None:
            return self.transmitters[0]
        for tx in self.transmitters:
            if tx.name == name:
                return tx
        raise InputError(f"no transmitter named {name!r}", str(self.path))


def _pattern(r: _Reader | None, base: Path) -> AntennaPattern:
    if r is None:
        return AntennaPattern()
    kind = PatternKind(str(r.raw("kind", "OMNI")).upper())
    gain = r.num("peak_gain_dbi", 0.0)
    if kind is PatternKind.OMNI:
        return AntennaPattern.omni(gain)
    hcut = r.file("horizontal_cut_path", base)
    vcut = r.file("vertical_cut_path", base)
    bw_h = r.num("beamwidth_h_deg", 360.0)
    return AntennaPattern(
        kind,
        gain,
        r.num("azimuth_deg", 0.0),
        r.num("elevation_deg", 0.0),
        bw_h,
        r.num("beamwidth_v_deg", bw_h),
        None if hcut is None else PatternCut.from_file(hcut),
        None if vcut is None else PatternCut.from_file(vcut),
    )


def _radio(r: _Reader | None, base: Path, defaults: RadioConfig) -> RadioConfig:
    if r is None:
        return defaults
    sens = r.num("sensitivity_dbm", defaults.sensitivity_dbm, dbm=True)
    pattern = _pattern(r.sub("pattern"), base) if r.has("pattern") else defaults.pattern
    return RadioConfig(
        tx_power_dbm=r.num("tx_power_dbm", defaults.tx_power_dbm, dbm=True),
        cable_loss_db=r.num("cable_loss_db", defaults.cable_loss_db),
        pattern=pattern,
        antenna_height_m=r.num("antenna_height_m", defaults.antenna_height_m),
        frequency_hz=r.num("frequency_hz", defaults.frequency_hz),
        sensitivity_dbm=sens,
        mcs_label=r.text("mcs_label", defaults.mcs_label),
    )


def _params(r: _Reader | None) -> PathLossParams:
    if r is None:
        return PathLossParams()
    curve = r.raw("interaction_loss_curve")
    after = r.raw("exponent_after_breakpoint") or {}
    max_int = r.raw("max_interactions")
    return PathLossParams(
        exponent_los=r.num("exponent_los", 2.6),
        exponent_olos=r.num("exponent_olos", 2.8),
        exponent_nlos=r.num("exponent_nlos", 3.0),
        breakpoint_m=r.num("breakpoint_m", None),
        exponent_after_breakpoint={VisibilityClass(str(k).upper()): float(v) for k, v in after.items()},
        interaction_loss_curve=LossCurve() if curve is None else LossCurve(tuple(tuple(map(float, p)) for p in curve)),
        waveguiding_gain_db=r.num("waveguiding_gain_db", 0.0),
        waveguiding_kappa=r.num("waveguiding_kappa", 0.0),
        waveguiding_max_db=r.num("waveguiding_max_db", 6.0),
        max_interactions=None if max_int is None else int(max_int),
    )


def _grid_values(spec: Any, path: Path) -> tuple:
    """Exponent grid: an explicit list or ``{start, stop, step}`` (inclusive)."""
    if isinstance(spec, dict):
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        if not step > 0 or stop < start:
            raise ParseError("exponent grid needs step > 0 and stop >= start", str(path))
        n = int(math.floor((stop - start) / step + 1e-9))
        return tuple(round(start + k * step, 10) for k in range(n + 1))
    return tuple(float(v) for v in spec)


def load_config(path: str | Path, output_dir: str | Path | None = None) -> ProjectConfig:
    """Load a project config and everything it references.

    All referenced files must exist; nothing is written here.
    """
    from .antenna import default_rx_config, default_tx_config

    path = Path(path)
    base = path.parent
    doc = _Reader(_load_yaml(path), "config", path)
    scene_path = doc.file("scene_path", base, required=True)
    scene = load_scene(scene_path)

    def build():
        txs = []
        for i, t in enumerate(doc.raw("transmitters") or []):
            r = _Reader(t, f"transmitters[{i}]", path)
            txs.append(
                Transmitter(
                    r.point("position_m"),
                    _radio(r.sub("radio"), base, default_tx_config()),
                    r.text("name", f"tx{i}"),
                )
            )
        if not txs:
            raise EmptyInput("config lists no transmitters", str(path))
        if len({t.name for t in txs}) != len(txs):
            raise ParseError("transmitter names must be unique", str(path))
        rx = _radio(doc.sub("receiver"), base, default_rx_config())
        params = _params(doc.sub("path_loss"))
        region = None
        cell = 5.0
        g = doc.sub("region")
        if g is not None:
            region = Region(g.num("x_min_m"), g.num("y_min_m"), g.num("x_max_m"), g.num("y_max_m"))
            cell = g.num("cell_size_m", 5.0)
        trajs = []
        for i, t in enumerate(doc.raw("trajectories") or []):
            r = _Reader(t, f"trajectories[{i}]", path)
            name = r.text("name", f"route{i}")
            if r.has("points_m"):
                trajs.append(Trajectory(name, tuple(r.points("points_m"))))
            else:
                spacing = r.num("spacing_m", 5.0)
                if not spacing > 0:
                    raise ParseError(f"trajectories[{i}].spacing_m must be > 0", str(path))
                trajs.append(Trajectory.line(name, r.point("start_m"), r.point("end_m"), spacing))
        geo = None
        o = doc.sub("geo_origin")
        if o is not None:
            geo = GeoOrigin(o.num("lat_deg"), o.num("lon_deg"))
        cal = CalibrationSetup()
        c = doc.sub("calibration")
        if c is not None:
            weight = c.num("weight", 0.25)
            fit = c.raw("fit_exponents_grid")
            cal = CalibrationSetup(
                cw_log=c.file("cw_log", base),
                sweep_log=c.file("sweep_log", base),
                service_log=c.file("service_log", base),
                record=None if c.raw("record") is None else (base / c.raw("record")),
                weight=weight,
                per_class=bool(c.raw("per_class", False)),
                gate_m=c.num("gate_m", 2.5),
                fit_grid=None if fit is None else _grid_values(fit, path),
                tx_name=c.text("tx", None),
            )
        out = output_dir
        if out is None and doc.has("output_dir"):
            out = base / doc.raw("output_dir")
        return ProjectConfig(
            path=path,
            scene_path=scene_path,
            scene=scene,
            transmitters=tuple(txs),
            rx=rx,
            params=params,
            region=region,
            cell_size_m=cell,
            trajectories=tuple(trajs),
            calibration=cal,
            geo_origin=geo,
            output_dir=None if out is None else Path(out),
            threads=int(doc.raw("threads", 1)),
            keep_breakdown=bool(doc.raw("keep_breakdown", False)),
        )

    try:
        return _wrap(build, path)
    except PlanningError as exc:
        exc.path = exc.path or str(path)
        raise


# -- logs -------------------------------------------------------------------


def _csv_rows(path: Path) -> tuple[list[str], list[tuple[int, dict]]]:
    if not path.is_file():
        raise MissingInput(f"file not found: {path}", str(path))
    with path.open(newline="") as fh:
        lines = [(n, line) for n, line in enumerate(fh, start=1) if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise EmptyInput("log is empty", str(path))
    header_line, header = lines[0]
    fields = [h.strip() for h in next(csv.reader([header]))]
    rows = []
    for lineno, text in lines[1:]:
        values = next(csv.reader([text]))
        if len(values) != len(fields):
            raise ParseError(f"expected {len(fields)} columns, got {len(values)}", str(path), lineno)
        rows.append((lineno, {k: v.strip() for k, v in zip(fields, values)}))
    if not rows:
        raise EmptyInput("log has a header but no rows", str(path))
    return fields, rows


def _float(row: dict, key: str, path: Path, lineno: int) -> float:
    try:
        value = float(row[key])
    except (KeyError, ValueError):
        raise ParseError(f"column {key!r}: not a number: {row.get(key)!r}", str(path), lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"column {key!r}: value must be finite", str(path), lineno)
    return value


def read_measurement_log(path: str | Path, geo_origin: GeoOrigin | None = None) -> list[MeasurementSample]:
    """Read a measurement log with planar (``x_m, y_m``) or geographic (``lat, lon``) positions."""
    path = Path(path)
    fields, rows = _csv_rows(path)
    planar = {"x_m", "y_m"} <= set(fields)
    geographic = {"lat", "lon"} <= set(fields)
    missing = [c for c in ("rss_dbm", "kind", "tx_power_dbm") if c not in fields]
    if missing or not (planar or geographic):
        need = missing + ([] if planar or geographic else ["x_m/y_m or lat/lon"])
        raise ParseError(f"missing columns: {', '.join(need)}", str(path), 1)
    if not planar and geo_origin is None:
        raise InputError("lat/lon log requires geo_origin in the config", str(path))
    out = []
    for lineno, row in rows:
        if planar:
            x, y = _float(row, "x_m", path, lineno), _float(row, "y_m", path, lineno)
        else:
            lat, lon = _float(row, "lat", path, lineno), _float(row, "lon", path, lineno)
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                raise ParseError("lat/lon out of range", str(path), lineno)
            px, py = geo_origin.project(lat, lon)
            x, y = float(px), float(py)
        rss = check_dbm(_float(row, "rss_dbm", path, lineno), "rss_dbm", str(path), lineno)
        ptx = check_dbm(_float(row, "tx_power_dbm", path, lineno), "tx_power_dbm", str(path), lineno)
        kind = row["kind"].upper()
        if kind not in ("CW", "SERVICE"):
            raise ParseError(f"kind must be CW or SERVICE, got {row['kind']!r}", str(path), lineno)
        out.append(MeasurementSample((x, y), rss, kind, ptx, row.get("timestamp") or None))
    return out


def read_sweep_log(path: str | Path) -> list[ModuleSweepRow]:
    path = Path(path)
    fields, rows = _csv_rows(path)
    missing = [c for c in ("attenuation_db", "p_spec_dbm", "p_module_dbm") if c not in fields]
    if missing:
        raise ParseError(f"missing columns: {', '.join(missing)}", str(path), 1)
    out = []
    for lineno, row in rows:
        att = _float(row, "attenuation_db", path, lineno)
        if att < 0:
            raise ParseError("attenuation_db must be >= 0", str(path), lineno)
        spec = check_dbm(_float(row, "p_spec_dbm", path, lineno), "p_spec_dbm", str(path), lineno)
        mod = check_dbm(_float(row, "p_module_dbm", path, lineno), "p_module_dbm", str(path), lineno)
        out.append(ModuleSweepRow(att, spec, mod))
    return out


# -- calibration record -------------------------------------------------------


def calibration_to_dict(cal: Calibrations, params: PathLossParams | None = None, extra: dict | None = None) -> dict:
    doc: dict = {"format_version": FORMAT_VERSION}
    if cal.cw is not None:
        doc["cw"] = {
            "weight": cal.cw.weight,
            "offset_db": cal.cw.offset_db,
            "sample_count": cal.cw.sample_count,
            "per_class_offsets_db": None
            if cal.cw.per_class_offsets is None
            else {v.value: o for v, o in sorted(cal.cw.per_class_offsets.items(), key=lambda kv: kv[0].code)},
        }
    if cal.module is not None:
        doc["module"] = {"offset_db": cal.module.offset_db, "rows_used": cal.module.rows_used}
    if params is not None:
        doc["exponents"] = {
            "exponent_los": params.exponent_los,
            "exponent_olos": params.exponent_olos,
            "exponent_nlos": params.exponent_nlos,
        }
    if extra:
        doc.update(extra)
    return doc


def read_calibration(path: str | Path) -> tuple[Calibrations, dict | None]:
    """Calibrations plus fitted exponents (or ``None``) from a record file."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"calibration record not found: {path}", str(path))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise ParseError("unsupported calibration record", str(path))
    try:
        cw = None
        if doc.get("cw"):
            c = doc["cw"]
            per = c.get("per_class_offsets_db")
            cw = CwCalibration(
                float(c["weight"]),
                float(c["offset_db"]),
                int(c["sample_count"]),
                None if per is None else {VisibilityClass(k): float(v) for k, v in per.items()},
            )
        module = None
        if doc.get("module"):
            module = ModuleCalibration(float(doc["module"]["offset_db"]), int(doc["module"]["rows_used"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed calibration record: {exc}", str(path)) from None
    return Calibrations(cw, module), doc.get("exponents")


# -- exports ----------------------------------------------------------------


def fmt(value: float | None, digits: int = 4) -> str:
    """Fixed-point text for exports; empty for missing values."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    text = f"{value:.{digits}f}"
    return "0." + "0" * digits if text == "-0." + "0" * digits else text


def atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def grid_csv(grid: CoverageGrid) -> str:
    gx, gy = grid.centers()
    lines = ["x_m,y_m,p_r_dbm,class,covered,distance_m"]
    ny, nx = grid.shape
    names = [v.value for v in VisibilityClass]
    for j in range(ny):
        for i in range(nx):
            p = grid.p_r_dbm[j, i]
            lines.append(
                ",".join(
                    (
                        fmt(gx[j, i], 3),
                        fmt(gy[j, i], 3),
                        fmt(float(p)),
                        names[grid.visibility[j, i]],
                        "1" if grid.covered[j, i] else "0",
                        fmt(grid.distance_m[j, i], 3),
                    )
                )
            )
    return "\n".join(lines) + "\n"


def grid_geojson(grid: CoverageGrid) -> str:
    """Feature collection of cell squares with the grid-file properties."""
    gx, gy = grid.centers()
    h = grid.cell_size_m / 2
    names = [v.value for v in VisibilityClass]
    features = []
    ny, nx = grid.shape
    for j in range(ny):
        for i in range(nx):
            x, y = round(float(gx[j, i]), 3), round(float(gy[j, i]), 3)
            ring = [[round(x - h, 3), round(y - h, 3)], [round(x + h, 3), round(y - h, 3)], [round(x + h, 3), round(y + h, 3)], [round(x - h, 3), round(y + h, 3)], [round(x - h, 3), round(y - h, 3)]]
            p = grid.p_r_dbm[j, i]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {
                        "x_m": x,
                        "y_m": y,
                        "p_r_dbm": None if math.isnan(p) else round(float(p), 4),
                        "class": names[grid.visibility[j, i]],
                        "covered": bool(grid.covered[j, i]),
                        "distance_m": round(float(grid.distance_m[j, i]), 3),
                    },
                }
            )
    return json.dumps({"type": "FeatureCollection", "features": features}, separators=(",", ":")) + "\n"


TRAJECTORY_COLUMNS = (
    "index", "x_m", "y_m", "along_m", "distance_m", "class", "path_found", "covered",
    "p_r_dbm", "p_r_raw_dbm", "pl_db", "free_space_reference_db", "distance_term_db",
    "interaction_term_db", "waveguiding_db", "n_interactions",
)


def trajectory_csv(records: Sequence[TrajectoryRecord], covered: Sequence[bool]) -> str:
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for rec, cov in zip(records, covered):
        b = rec.breakdown
        lines.append(
            ",".join(
                (
                    str(rec.index),
                    fmt(rec.x_m, 3),
                    fmt(rec.y_m, 3),
                    fmt(rec.along_m, 3),
                    fmt(rec.distance_m, 3),
                    rec.visibility.value,
                    "1" if rec.path_found else "0",
                    "1" if cov else "0",
                    fmt(rec.power_dbm),
                    fmt(rec.raw_power_dbm),
                    fmt(None if b is None else b.total_db),
                    fmt(None if b is None else b.free_space_reference_db),
                    fmt(None if b is None else b.distance_term_db),
                    fmt(None if b is None else b.interaction_term_db),
                    fmt(None if b is None else b.waveguiding_db),
                    str(rec.n_interactions),
                )
            )
        )
    return "\n".join(lines) + "\n"


def metrics_table(metrics, title: str) -> str:
    """Plain-text table: rows RMSE/SD (plus bias and N), columns all/LOS/OLOS/NLOS."""
    cols = ["all"] + [v.value for v in VisibilityClass]
    cells = [metrics.overall] + [metrics.per_class.get(v) for v in VisibilityClass]
    out = [title, f"{'':<10}" + "".join(f"{c:>10}" for c in cols)]
    for label, attr, digits in (("RMSE [dB]", "rmse_db", 2), ("SD [dB]", "sd_db", 2), ("bias [dB]", "bias_db", 2), ("N", "count", 0)):
        row = f"{label:<10}"
        for m in cells:
            if m is None:
                row += f"{'absent':>10}"
            elif digits == 0:
                row += f"{getattr(m, attr):>10d}"
            else:
                row += f"{fmt(getattr(m, attr), digits):>10}"
        out.append(row)
    return "\n".join(out) + "\n"


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"

