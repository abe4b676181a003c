"""Antenna patterns and per-station radio configuration.

Azimuths are compass bearings in degrees (0 = +y/north, 90 = +x/east);
elevations are degrees above the horizontal plane.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError

PATTERN_FLOOR_DB = 30.0
# Quadratic roll-off coefficient: 12 * (0.5)**2 = 3 dB at the half-power half-angle.
ROLLOFF_COEFF = 12.0


class PatternKind(str, enum.Enum):
    OMNI = "OMNI"
    PANEL = "PANEL"


def wrap_deg(angle: float) -> float:
    """Wrap an angle to the half-open interval (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


@dataclass(frozen=True)
class PatternCut:
    """Tabulated gain cut: gain in dBi versus offset angle from boresight."""

    angles_deg: tuple
    gains_dbi: tuple

    def __post_init__(self) -> None:
        if len(self.angles_deg) != len(self.gains_dbi) or len(self.angles_deg) < 2:
            raise DomainError("pattern cut needs at least two (angle, gain) pairs")
        if any(b <= a for a, b in zip(self.angles_deg, self.angles_deg[1:])):
            raise DomainError("pattern cut angles must be strictly increasing")

    def __call__(self, offset_deg: float) -> float:
        return float(np.interp(offset_deg, self.angles_deg, self.gains_dbi))

    @classmethod
    def from_file(cls, path: str | Path) -> "PatternCut":
        """Read a two-column ``angle_deg, gain_dbi`` text file.

        Separators may be commas or whitespace; ``#`` starts a comment and a
        non-numeric first row is taken as a header.
        """
        rows = []
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                if len(parts) != 2:
                    raise ValueError
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                if not rows and lineno == 1:
                    continue
                raise ParseError(f"expected 'angle_deg, gain_dbi', got {raw!r}", str(path), lineno)
        rows.sort()
        try:
            return cls(tuple(r[0] for r in rows), tuple(r[1] for r in rows))
        except DomainError as exc:
            raise ParseError(str(exc), str(path)) from None


@dataclass(frozen=True)
class AntennaPattern:
    kind: PatternKind = PatternKind.OMNI
    peak_gain_dbi: float = 0.0
    boresight_azimuth: float = 0.0
    boresight_elevation: float = 0.0
    beamwidth_h: float = 360.0
    beamwidth_v: float = 360.0
    horizontal_cut: PatternCut | None = None
    vertical_cut: PatternCut | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PatternKind(self.kind))
        if self.kind is PatternKind.PANEL:
            for bw in (self.beamwidth_h, self.beamwidth_v):
                if not 0.0 < bw <= 360.0:
                    raise DomainError("panel beamwidths must lie in (0, 360]")

    @classmethod
    def omni(cls, gain_dbi: float) -> "AntennaPattern":
        return cls(PatternKind.OMNI, gain_dbi)

    @classmethod
    def panel(
        cls,
        gain_dbi: float,
        azimuth: float,
        beamwidth_h: float,
        beamwidth_v: float | None = None,
        elevation: float = 0.0,
    ) -> "AntennaPattern":
        return cls(
            PatternKind.PANEL,
            gain_dbi,
            azimuth,
            elevation,
            beamwidth_h,
            beamwidth_h if beamwidth_v is None else beamwidth_v,
        )


def gain_toward(pattern: AntennaPattern, azimuth: float, elevation: float) -> float:
    """Antenna gain in dBi toward the given direction.

    Panels use a parabolic dB roll-off, ``peak - 12*((daz/bw_h)**2 +
    (del/bw_v)**2)``, floored 30 dB below peak. Tabulated cuts, when present,
    replace the parabola on their axis and are not floored.
    """
    if not (math.isfinite(azimuth) and math.isfinite(elevation)):
        raise DomainError("direction angles must be finite")
    if pattern.kind is PatternKind.OMNI:
        return pattern.peak_gain_dbi
    daz = wrap_deg(azimuth - pattern.boresight_azimuth)
    dele = wrap_deg(elevation - pattern.boresight_elevation)
    peak = pattern.peak_gain_dbi
    if pattern.horizontal_cut is None and pattern.vertical_cut is None:
        loss = ROLLOFF_COEFF * ((daz / pattern.beamwidth_h) ** 2 + (dele / pattern.beamwidth_v) ** 2)
        return peak - min(loss, PATTERN_FLOOR_DB)
    if pattern.horizontal_cut is not None:
        loss_h = peak - pattern.horizontal_cut(daz)
    else:
        loss_h = min(ROLLOFF_COEFF * (daz / pattern.beamwidth_h) ** 2, PATTERN_FLOOR_DB)
    if pattern.vertical_cut is not None:
        loss_v = peak - pattern.vertical_cut(dele)
    else:
        loss_v = min(ROLLOFF_COEFF * (dele / pattern.beamwidth_v) ** 2, PATTERN_FLOOR_DB)
    return peak - loss_h - loss_v


def _wrap_many(a: np.ndarray) -> np.ndarray:
    a = np.fmod(a, 360.0)
    a = np.where(a <= -180.0, a + 360.0, a)
    return np.where(a > 180.0, a - 360.0, a)


def gains_toward(pattern: AntennaPattern, azimuth, elevation) -> np.ndarray:
    """Array version of :func:`gain_toward`."""
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    shape = np.broadcast(az, el).shape
    if pattern.kind is PatternKind.OMNI:
        return np.full(shape, float(pattern.peak_gain_dbi))
    daz = _wrap_many(az - pattern.boresight_azimuth)
    dele = _wrap_many(el - pattern.boresight_elevation)
    peak = pattern.peak_gain_dbi
    if pattern.horizontal_cut is None and pattern.vertical_cut is None:
        loss = ROLLOFF_COEFF * ((daz / pattern.beamwidth_h) ** 2 + (dele / pattern.beamwidth_v) ** 2)
        return peak - np.minimum(loss, PATTERN_FLOOR_DB)
    if pattern.horizontal_cut is not None:
        hc = pattern.horizontal_cut
        loss_h = peak - np.interp(daz, hc.angles_deg, hc.gains_dbi)
    else:
        loss_h = np.minimum(ROLLOFF_COEFF * (daz / pattern.beamwidth_h) ** 2, PATTERN_FLOOR_DB)
    if pattern.vertical_cut is not None:
        vc = pattern.vertical_cut
        loss_v = peak - np.interp(dele, vc.angles_deg, vc.gains_dbi)
    else:
        loss_v = np.minimum(ROLLOFF_COEFF * (dele / pattern.beamwidth_v) ** 2, PATTERN_FLOOR_DB)
    return np.broadcast_to(peak - loss_h - loss_v, shape).astype(float)


def direction_angles_many(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    az = np.degrees(np.arctan2(d[..., 0], d[..., 1]))
    el = np.degrees(np.arctan2(d[..., 2], np.hypot(d[..., 0], d[..., 1])))
    return az, el


def direction_angles(src, dst) -> tuple[float, float]:
    """Compass azimuth and elevation (degrees) of the vector ``src -> dst``."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    dz = dst[2] - src[2]
    az = math.degrees(math.atan2(dx, dy))
    el = math.degrees(math.atan2(dz, math.hypot(dx, dy)))
    return az, el


@dataclass(frozen=True)
class RadioConfig:
    """Radio front-end parameters of one station (transmitter or receiver)."""

    tx_power_dbm: float = 0.0
    cable_loss_db: float = 0.0
    pattern: AntennaPattern = field(default_factory=AntennaPattern)
    antenna_height_m: float = 1.5
    frequency_hz: float = 5.9e9
    sensitivity_dbm: float | None = None
    mcs_label: str = ""

    def __post_init__(self) -> None:
        if not self.frequency_hz > 0:
            raise DomainError("frequency_hz must be > 0")
        if not self.antenna_height_m >= 0:
            raise DomainError("antenna_height_m must be >= 0")
        if not self.cable_loss_db >= 0:
            raise DomainError("cable_loss_db must be >= 0")


# Field-test station defaults: 4 m panel transmitter, 1.5 m dipole receiver.
RSU_PANEL = AntennaPattern.panel(10.0, azimuth=180.0, beamwidth_h=16.0, beamwidth_v=16.0)
RX_DIPOLE = AntennaPattern.omni(2.0)


def default_tx_config(pattern: AntennaPattern = RSU_PANEL) -> RadioConfig:
    return RadioConfig(tx_power_dbm=23.0, pattern=pattern, antenna_height_m=4.0, frequency_hz=5.9e9)


def default_rx_config(pattern: AntennaPattern = RX_DIPOLE) -> RadioConfig:
    return RadioConfig(
        pattern=pattern,
        antenna_height_m=1.5,
        frequency_hz=5.9e9,
        sensitivity_dbm=-95.0,
        mcs_label="QPSK r=1/2",
    )
