from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fit_scene, make_scene, synthetic_samples, field_rx, field_tx
from rsuplan.calibration import (
    MeasurementSample,
    ModuleCalibration,
    ModuleSweepRow,
    SampleKind,
    align_samples,
    apply_cw_calibration,
    apply_module_calibration,
    compare_samples,
    cw_offset,
    evaluate_metrics,
    fit_exponents,
    measured_path_loss,
    module_offset,
)
from rsuplan.errors import DomainError, EmptyInput, NoPathFound
from rsuplan.propagation import CALIBRATED_PARAMS, DEFAULT_PARAMS, Transmitter
from rsuplan.scene import VisibilityClass

GRID = np.round(np.arange(2.0, 3.55, 0.1), 1)
ROAD = np.column_stack([np.arange(-100.0, 101.0, 2.0), np.full(101, 30.0)])


class TestCwOffset:
    def test_recovers_bias(self):
        rng = np.random.default_rng(0)
        sim = rng.uniform(60, 140, 50)
        cal = cw_offset(list(zip(sim + 2.5, sim)), 1.0)
        assert cal.offset_db == pytest.approx(2.5, abs=1e-9)
        assert cal.sample_count == 50

    def test_weight_scales(self):
        pairs = [(100.0, 96.0), (90.0, 86.0)]
        assert cw_offset(pairs, 0.25).offset_db == 1.0
        assert cw_offset(pairs, 0.0).offset_db == 0.0

    def test_weight_domain(self):
        with pytest.raises(DomainError):
            cw_offset([(1.0, 0.0)], 1.5)
        with pytest.raises(DomainError):
            cw_offset([(1.0, 0.0)], -0.1)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            cw_offset([], 0.5)

    def test_per_class(self):
        pairs = [(100.0, 98.0), (100.0, 96.0), (80.0, 81.0)]
        classes = [VisibilityClass.NLOS, VisibilityClass.NLOS, VisibilityClass.LOS]
        cal = cw_offset(pairs, 1.0, classes)
        assert cal.per_class_offsets == {VisibilityClass.NLOS: 3.0, VisibilityClass.LOS: -1.0}
        assert cal.offset_for(VisibilityClass.OLOS) == pytest.approx(5.0 / 3.0)
        assert apply_cw_calibration(-80.0, cal, VisibilityClass.NLOS) == -77.0

    def test_added_to_power(self):
        cal = cw_offset([(101.0, 100.0)], 1.0)
        assert apply_cw_calibration(np.array([-70.0, -90.0]), cal).tolist() == [-69.0, -89.0]

    @settings(max_examples=100, deadline=None)
    @given(vals=st.lists(st.tuples(st.floats(40, 160), st.floats(40, 160)), min_size=1, max_size=30), w=st.floats(0, 1))
    def test_linear_in_weight(self, vals, w):
        full = cw_offset(vals, 1.0).offset_db
        assert cw_offset(vals, w).offset_db == pytest.approx(w * full, abs=1e-9)


class TestModule:
    def sweep(self, gap=8.0):
        return [ModuleSweepRow(a, -a, -a - gap) for a in np.arange(35.0, 106.0)]

    def test_constant_gap(self):
        cal = module_offset(self.sweep())
        assert cal.offset_db == 8.0 and cal.rows_used == 71

    def test_application(self):
        cal = ModuleCalibration(8.0, 71)
        lv = np.array([-60.0, -95.5])
        assert (apply_module_calibration(lv, cal) - lv).tolist() == [8.0, 8.0]

    def test_empty(self):
        with pytest.raises(EmptyInput):
            module_offset([])

    def test_attenuation_domain(self):
        with pytest.raises(DomainError):
            ModuleSweepRow(-1.0, 0.0, 0.0)


class TestMetrics:
    def test_constant_residuals(self):
        m = evaluate_metrics([(x + 1.0, x, VisibilityClass.LOS) for x in (80.0, 90.0, 100.0)])
        assert (m.rmse_db, m.sd_db, m.overall.bias_db) == (1.0, 0.0, 1.0)

    def test_alternating(self):
        m = evaluate_metrics([(103.0, 100.0, "LOS"), (97.0, 100.0, "NLOS")])
        assert (m.rmse_db, m.sd_db, m.overall.bias_db) == (3.0, 3.0, 0.0)
        assert m.per_class[VisibilityClass.OLOS] is None
        assert m.to_dict()["OLOS"] is None
        assert m.to_dict()["NLOS"]["bias_db"] == -3.0

    def test_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            r = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10), int(rng.integers(1, 40)))
            m = evaluate_metrics([(x, 0.0, "LOS") for x in r])
            assert m.rmse_db**2 == pytest.approx(m.overall.bias_db**2 + m.sd_db**2, abs=1e-9)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            evaluate_metrics([])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-30, 30), min_size=1, max_size=50))
    def test_sd_never_exceeds_rmse(self, r):
        m = evaluate_metrics([(x, 0.0, "OLOS") for x in r])
        assert m.sd_db <= m.rmse_db + 1e-9


class TestAlignment:
    def test_gate(self):
        sim = [(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)]
        idx = align_samples(sim, [(4.0, 1.0), (10.0, 2.4), (20.0, 0.0)], gate_m=2.5)
        assert idx.tolist() == [1, 2, -1]

    def test_empty(self):
        assert align_samples([], [(1.0, 1.0)]).tolist() == [-1]


class TestMeasuredPathLoss:
    def test_inverts_link_budget(self):
        pl = measured_path_loss(-70.0, 23.0, field_tx(), field_rx(), 10.0, 2.0)
        assert pl == pytest.approx(23 + 10 + 2 + 70)

    def test_independent_of_source_power(self):
        a = measured_path_loss(-70.0, 23.0, field_tx(), field_rx(), 10.0, 2.0)
        b = measured_path_loss(-60.0, 33.0, field_tx(), field_rx(), 10.0, 2.0)
        assert a == b


class TestCompareAndFit:
    tx = Transmitter((0.0, 0.0), field_tx())

    def test_round_trip_zero(self):
        s = fit_scene()
        samples = synthetic_samples(s, self.tx, field_rx(), ROAD, DEFAULT_PARAMS)
        cmp_ = compare_samples(s, self.tx, field_rx(), samples)
        assert np.max(np.abs(cmp_.simulated_db - cmp_.measured_db)) < 1e-9
        assert set(cmp_.visibility.tolist()) == {v.code for v in VisibilityClass}

    def test_bias_recovered(self):
        s = fit_scene()
        samples = synthetic_samples(s, self.tx, field_rx(), ROAD, DEFAULT_PARAMS, bias_db=4.0)
        cmp_ = compare_samples(s, self.tx, field_rx(), samples)
        assert cw_offset(list(zip(cmp_.measured_db, cmp_.simulated_db)), 1.0).offset_db == pytest.approx(4.0, abs=1e-9)

    def test_sample_in_building(self):
        s = fit_scene()
        bad = [MeasurementSample((40.0, 15.0), -80.0, SampleKind.CW, 23.0)]
        with pytest.raises(NoPathFound):
            compare_samples(s, self.tx, field_rx(), bad)

    def test_fit_exact(self):
        s = fit_scene()
        samples = synthetic_samples(s, self.tx, field_rx(), ROAD, CALIBRATED_PARAMS)
        got = fit_exponents(s, self.tx, field_rx(), samples, GRID)
        assert (got.exponent_los, got.exponent_olos, got.exponent_nlos) == (2.3, 2.9, 3.1)

    def test_fit_keeps_missing_class(self):
        samples = synthetic_samples(make_scene(), self.tx, field_rx(), ROAD, CALIBRATED_PARAMS)
        got = fit_exponents(make_scene(), self.tx, field_rx(), samples, GRID)
        assert got.exponent_los == 2.3
        assert got.exponent_nlos == DEFAULT_PARAMS.exponent_nlos

    def test_fit_per_class_grid(self):
        s = fit_scene()
        samples = synthetic_samples(s, self.tx, field_rx(), ROAD, CALIBRATED_PARAMS)
        got = fit_exponents(s, self.tx, field_rx(), samples, {"LOS": [2.0, 2.3], "OLOS": [2.9], "NLOS": [3.0, 3.5]})
        assert (got.exponent_los, got.exponent_olos, got.exponent_nlos) == (2.3, 2.9, 3.0)

    def test_fit_empty(self):
        with pytest.raises(EmptyInput):
            fit_exponents(fit_scene(), self.tx, field_rx(), [], GRID)


def test_noisy_bias_within_bound():
    rng = np.random.default_rng(3)
    sim = rng.uniform(70, 130, 200)
    hits = 0
    for _ in range(200):
        meas = sim + 1.5 + rng.normal(0, 1.0, 200)
        hits += abs(cw_offset(list(zip(meas, sim)), 1.0).offset_db - 1.5) <= 3 / math.sqrt(200)
    assert hits >= 198
