from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import box, make_scene, field_rx, field_tx
from oracles import coverage_radius
from rsuplan.calibration import CwCalibration, ModuleCalibration
from rsuplan.coverage import (
    NO_CALIBRATION,
    Calibrations,
    Region,
    check_coverage,
    coverage_boundary_distance,
    coverage_report,
    coverage_threshold,
    route_summary,
    simulate_grid,
    simulate_trajectory,
)
from rsuplan.errors import DomainError, EmptyInput
from rsuplan.propagation import DEFAULT_PARAMS, PathLossParams, Transmitter
from rsuplan.scene import VisibilityClass

MOD8 = ModuleCalibration(8.0, 71)
TX = Transmitter((0.0, 0.0), field_tx())


class TestThreshold:
    def test_fixed_points(self):
        assert check_coverage(-80.0, field_rx(), MOD8)
        assert not check_coverage(-87.0, field_rx(), MOD8)
        assert not check_coverage(-95.0, field_rx(), None)
        assert check_coverage(-94.999, field_rx(), None)

    def test_missing_sensitivity(self):
        with pytest.raises(DomainError):
            coverage_threshold(field_rx(sensitivity=None), None)

    @settings(max_examples=200, deadline=None)
    @given(p=st.floats(-150, 0), s=st.floats(-110, -60), o=st.floats(-10, 10))
    def test_strict(self, p, s, o):
        rx = field_rx(sensitivity=s)
        assert check_coverage(p, rx, ModuleCalibration(o, 1)) == (p > s + o)


class TestGrid:
    def test_radial_symmetry(self):
        grid = simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, Region(-50, -50, 50, 50), 5.0)
        assert grid.shape == (20, 20)
        p = grid.p_r_dbm
        assert np.allclose(p, p[::-1, :], atol=1e-9)
        assert np.allclose(p, p[:, ::-1], atol=1e-9)
        assert np.allclose(p, p.T, atol=1e-9)
        assert (grid.visibility == VisibilityClass.LOS.code).all()

    def test_centres_and_distance(self):
        grid = simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, Region(0, 0, 30, 10), 10.0)
        xs, ys = grid.centers()
        assert xs[0].tolist() == [5.0, 15.0, 25.0] and ys[:, 0].tolist() == [5.0]
        assert grid.distance_m[0, 1] == pytest.approx(math.dist((0, 0, 4.0), (15.0, 5.0, 1.5)))

    def test_partial_cells(self):
        assert Region(0, 0, 12, 10).shape(5.0) == (2, 3)
        with pytest.raises(DomainError):
            Region(0, 0, 0, 10)

    def test_offsets_shift_levels(self):
        region = Region(-40, -40, 40, 40)
        base = simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, region, 8.0)
        cal = Calibrations(CwCalibration(1.0, 1.5, 10), MOD8)
        shifted = simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, cal, region, 8.0)
        assert np.allclose(shifted.p_r_dbm - base.p_r_dbm, 9.5, atol=1e-12)
        assert shifted.threshold_dbm == -87.0

    def test_cw_offset_monotone_in_coverage(self):
        region = Region(-400, -400, 400, 400)
        scene = make_scene(box(50, -30, 80, 30, top=20.0))
        fracs = []
        for off in (-10.0, -3.0, 0.0, 3.0, 10.0):
            g = simulate_grid(scene, TX, field_rx(), DEFAULT_PARAMS, Calibrations(CwCalibration(1.0, off, 1)), region, 20.0)
            fracs.append(np.count_nonzero(g.covered) / g.covered.size)
        assert fracs == sorted(fracs) and fracs[0] < fracs[-1]

    def test_sensitivity_monotone(self):
        region = Region(-400, -400, 400, 400)
        grid = simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, region, 20.0)
        fracs = []
        for s in (-110.0, -100.0, -95.0, -85.0, -70.0):
            rx = field_rx(sensitivity=s)
            g = simulate_grid(make_scene(), TX, rx, DEFAULT_PARAMS, NO_CALIBRATION, region, 20.0)
            fracs.append(coverage_report(g, rx).covered_fraction)
        assert fracs == sorted(fracs, reverse=True)
        assert grid.covered.any()

    def test_enclosed_cells_uncovered(self):
        building = box(20, 20, 40, 40, top=30.0)
        grid = simulate_grid(make_scene(building), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, Region(0, 0, 60, 60), 5.0)
        xs, ys = grid.centers()
        inside = (xs > 20) & (xs < 40) & (ys > 20) & (ys < 40)
        assert not grid.path_found[inside].any()
        assert np.isnan(grid.p_r_dbm[inside]).all()
        assert not grid.covered[inside].any()
        assert grid.path_found[~inside].all()

    def test_workers_identical(self):
        scene = make_scene(box(30, -10, 50, 10), box(-40, 20, -20, 60, top=5.0))
        args = (scene, TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, Region(-100, -100, 100, 100), 2.0)
        one = simulate_grid(*args, workers=1)
        three = simulate_grid(*args, workers=3)
        assert one.p_r_dbm.tobytes() == three.p_r_dbm.tobytes()
        assert one.covered.tobytes() == three.covered.tobytes()

    def test_progress_monotone(self):
        seen = []
        simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, Region(0, 0, 400, 400), 2.0, progress=lambda d, t: seen.append((d, t)))
        assert seen and seen[-1][0] == seen[-1][1] == 40000
        assert [d for d, _ in seen] == sorted(d for d, _ in seen)

    def test_breakdown_kept(self):
        g = simulate_grid(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, Region(0, 0, 20, 20), 10.0, keep_breakdown=True)
        assert g.breakdown is not None and g.path_loss_db is not None
        parts = sum(g.breakdown[k] for k in g.breakdown)
        assert np.allclose(parts, g.path_loss_db)


class TestTrajectory:
    def road(self, n=81, step=5.0):
        return [(2.5 + step * i, 0.0) for i in range(n)]

    def test_identity_calibration(self):
        recs = simulate_trajectory(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, self.road())
        assert all(r.power_dbm == r.raw_power_dbm for r in recs)
        assert [r.along_m for r in recs[:3]] == [0.0, 5.0, 10.0]

    def test_open_scene_monotone(self):
        recs = simulate_trajectory(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, self.road())
        p = [r.power_dbm for r in recs]
        assert all(a > b for a, b in zip(p, p[1:]))

    def test_boundary_matches_closed_form(self):
        params = PathLossParams(exponent_los=2.0)
        pts = [(5.0 * i, 0.0) for i in range(1, 1300)]
        recs = simulate_trajectory(make_scene(), Transmitter((0.0, 0.0), field_tx()), field_rx(), params, NO_CALIBRATION, pts)
        b = coverage_boundary_distance(recs, field_rx(), MOD8)
        d_star = coverage_radius(23.0, 10.0, 2.0, -87.0, 5.9e9, 2.0)
        # Boundary is reported as along-route distance; route starts 5 m out.
        assert abs((b + 5.0) - d_star) <= 5.0

    def test_boundary_none_when_all_covered(self):
        recs = simulate_trajectory(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, self.road(5))
        assert coverage_boundary_distance(recs, field_rx(), None) is None
        summary = route_summary(recs, field_rx(), None)
        assert summary["max_gap_m"] == 0.0 and summary["contiguous_coverage_m"] == 20.0

    def test_empty(self):
        with pytest.raises(EmptyInput):
            coverage_boundary_distance([], field_rx(), None)
        with pytest.raises(EmptyInput):
            simulate_trajectory(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, [])

    def test_barrier_transition(self):
        barrier = box(100, 5, 400, 5.5, top=6.0)
        scene = make_scene(barrier)
        tx = Transmitter((0.0, 10.0), field_tx())
        recs = simulate_trajectory(scene, tx, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, self.road(80))
        vis = [r.visibility for r in recs]
        k = vis.index(VisibilityClass.NLOS)
        assert all(v is VisibilityClass.LOS for v in vis[:k])
        pl = [-r.power_dbm for r in recs]
        step = pl[k] - pl[k - 1]
        assert step > max(pl[i] - pl[i - 1] for i in range(1, k))

    def test_report(self):
        region = Region(-1000, -1000, 1000, 1000)
        grid = simulate_grid(make_scene(), TX, field_rx(sensitivity=-85.0), DEFAULT_PARAMS, NO_CALIBRATION, region, 50.0)
        recs = simulate_trajectory(make_scene(), TX, field_rx(), DEFAULT_PARAMS, NO_CALIBRATION, self.road(100, 10.0))
        rep = coverage_report(grid, field_rx(sensitivity=-85.0), None, recs, "a")
        d = rep.to_dict()
        assert d["tx"] == "a" and 0 < d["covered_fraction"] < 1
        assert d["undersupplied_cell_count"] == np.count_nonzero(~grid.covered)
        assert rep.margin_db > 0
        assert rep.boundary_distance_m == rep.contiguous_coverage_m + 10.0
