from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsuplan.antenna import (
    RSU_PANEL,
    RX_DIPOLE,
    AntennaPattern,
    PatternCut,
    PatternKind,
    RadioConfig,
    default_rx_config,
    default_tx_config,
    direction_angles,
    direction_angles_many,
    gain_toward,
    gains_toward,
    wrap_deg,
)
from rsuplan.errors import DomainError, ParseError

finite_angle = st.floats(-720, 720, allow_nan=False)


def test_omni_constant():
    p = AntennaPattern.omni(2.0)
    for az, el in [(0, 0), (123.4, -45), (-179, 89)]:
        assert gain_toward(p, az, el) == 2.0


def test_panel_boresight():
    p = AntennaPattern.panel(10.0, azimuth=37.0, beamwidth_h=16.0, elevation=-2.0)
    assert gain_toward(p, 37.0, -2.0) == 10.0


def test_panel_half_power():
    p = AntennaPattern.panel(10.0, azimuth=0.0, beamwidth_h=16.0)
    assert gain_toward(p, 8.0, 0.0) == pytest.approx(7.0, abs=1e-12)
    assert gain_toward(p, -8.0, 0.0) == pytest.approx(7.0, abs=1e-12)
    assert gain_toward(p, 0.0, 8.0) == pytest.approx(7.0, abs=1e-12)


def test_panel_floor_behind():
    p = AntennaPattern.panel(10.0, azimuth=90.0, beamwidth_h=16.0)
    assert gain_toward(p, -90.0, 0.0) == -20.0


def test_azimuth_wrap_across_north():
    p = AntennaPattern.panel(10.0, azimuth=355.0, beamwidth_h=16.0)
    assert gain_toward(p, 3.0, 0.0) == pytest.approx(10.0 - 12 * (8 / 16) ** 2)


def test_wrap_range():
    assert wrap_deg(180.0) == 180.0
    assert wrap_deg(-180.0) == 180.0
    assert wrap_deg(540.0) == 180.0
    assert wrap_deg(-190.0) == 170.0


def test_panel_beamwidth_validation():
    with pytest.raises(DomainError):
        AntennaPattern.panel(10.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        AntennaPattern.panel(10.0, 0.0, 400.0)
    assert AntennaPattern.panel(10.0, 0.0, 360.0).beamwidth_h == 360.0


def test_non_finite_angle():
    with pytest.raises(DomainError):
        gain_toward(RSU_PANEL, math.nan, 0.0)


def test_direction_angles_compass():
    assert direction_angles((0, 0, 0), (0, 10, 0)) == pytest.approx((0.0, 0.0))
    assert direction_angles((0, 0, 0), (10, 0, 0)) == pytest.approx((90.0, 0.0))
    assert direction_angles((0, 0, 0), (0, -10, 0))[0] == pytest.approx(180.0)
    assert direction_angles((0, 0, 0), (10, 0, 10))[1] == pytest.approx(45.0)


def test_direction_vectorized_matches_scalar():
    rng = np.random.default_rng(1)
    src = rng.normal(size=(50, 3))
    dst = rng.normal(size=(50, 3))
    az, el = direction_angles_many(src, dst)
    for i in range(50):
        a, e = direction_angles(src[i], dst[i])
        assert az[i] == pytest.approx(a) and el[i] == pytest.approx(e)


def test_vectorized_gain_matches_scalar():
    rng = np.random.default_rng(2)
    az = rng.uniform(-400, 400, 200)
    el = rng.uniform(-90, 90, 200)
    for p in (RSU_PANEL, RX_DIPOLE, AntennaPattern.panel(6.0, 45.0, 70.0, 20.0, 5.0)):
        g = gains_toward(p, az, el)
        for i in range(0, 200, 13):
            assert g[i] == pytest.approx(gain_toward(p, az[i], el[i]), abs=1e-12)


def test_pattern_cut_file(tmp_path):
    f = tmp_path / "h.csv"
    f.write_text("angle_deg,gain_dbi\n# comment\n-180, -5\n0, 12\n180 -5\n")
    cut = PatternCut.from_file(f)
    assert cut(0.0) == 12.0
    assert cut(90.0) == pytest.approx(3.5)
    p = AntennaPattern(PatternKind.PANEL, 12.0, 0.0, 0.0, 30.0, 30.0, horizontal_cut=cut)
    assert gain_toward(p, 90.0, 0.0) == pytest.approx(3.5)
    assert gains_toward(p, np.array([90.0]), np.array([0.0]))[0] == pytest.approx(3.5)


def test_pattern_cut_file_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("0, 1\n10, x\n")
    with pytest.raises(ParseError) as exc:
        PatternCut.from_file(f)
    assert exc.value.line == 2


def test_radio_config_validation():
    with pytest.raises(DomainError):
        RadioConfig(frequency_hz=0.0)
    with pytest.raises(DomainError):
        RadioConfig(antenna_height_m=-1.0)
    with pytest.raises(DomainError):
        RadioConfig(cable_loss_db=-0.5)


def test_field_test_defaults():
    tx = default_tx_config()
    rx = default_rx_config()
    assert (tx.tx_power_dbm, tx.antenna_height_m, tx.frequency_hz) == (23.0, 4.0, 5.9e9)
    assert tx.pattern.peak_gain_dbi == 10.0 and tx.pattern.beamwidth_h == 16.0
    assert (rx.antenna_height_m, rx.sensitivity_dbm) == (1.5, -95.0)
    assert rx.pattern.kind is PatternKind.OMNI and rx.pattern.peak_gain_dbi == 2.0


@settings(max_examples=300, deadline=None)
@given(az=finite_angle, el=st.floats(-90, 90), bw=st.floats(1, 360), peak=st.floats(-5, 25))
def test_gain_bounds_and_symmetry(az, el, bw, peak):
    p = AntennaPattern.panel(peak, 20.0, bw, bw)
    g = gain_toward(p, 20.0 + az, el)
    assert peak - 30.0 - 1e-9 <= g <= peak + 1e-12
    assert g == pytest.approx(gain_toward(p, 20.0 - az, -el), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(az=st.floats(-179, 179), el=st.floats(-80, 80), h=st.floats(1e-6, 1e-3))
def test_gain_continuous(az, el, h):
    p = AntennaPattern.panel(10.0, 0.0, 16.0)
    assert abs(gain_toward(p, az + h, el) - gain_toward(p, az, el)) < 1.0 * h * 12 * 2 * 360 / 16**2 + 1e-9
