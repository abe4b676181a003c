from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rsuplan.antenna import AntennaPattern, RadioConfig  # noqa: E402
from rsuplan.scene import Material, Obstacle, ObstacleKind, Scene  # noqa: E402

CONCRETE = Material("concrete", 5.0, 6.0)
FOLIAGE = Material("foliage", 1.5, 2.0)


def box(x0, y0, x1, y1, top=10.0, base=0.0, kind=ObstacleKind.BUILDING, material="concrete", hard=None):
    return Obstacle(((x0, y0), (x1, y0), (x1, y1), (x0, y1)), base, top, material, kind, hard)


def make_scene(*obstacles, terrain=None) -> Scene:
    return Scene(obstacles, [CONCRETE, FOLIAGE], terrain)


def field_tx(pattern=None) -> RadioConfig:
    return RadioConfig(23.0, 0.0, pattern or AntennaPattern.omni(10.0), 4.0, 5.9e9)


def field_rx(pattern=None, sensitivity=-95.0) -> RadioConfig:
    return RadioConfig(0.0, 0.0, pattern or AntennaPattern.omni(2.0), 1.5, 5.9e9, sensitivity, "QPSK r=1/2")


def random_scene(rng: np.random.Generator, n_max: int = 5, region: float = 60.0) -> Scene:
    """Disjoint axis-aligned boxes and triangles of mixed kinds and heights."""
    obs = []
    taken = []
    kinds = [ObstacleKind.BUILDING, ObstacleKind.NOISE_BARRIER, ObstacleKind.VEGETATION, ObstacleKind.VEHICLE]
    for _ in range(int(rng.integers(1, n_max + 1))):
        for _attempt in range(20):
            x0, y0 = rng.uniform(-region, region, 2)
            w, h = rng.uniform(2, 20, 2)
            bb = (x0, y0, x0 + w, y0 + h)
            if all(bb[2] < t[0] or bb[0] > t[2] or bb[3] < t[1] or bb[1] > t[3] for t in taken):
                break
        else:
            continue
        taken.append(bb)
        base = float(rng.choice([0.0, 0.0, rng.uniform(0, 3)]))
        top = base + float(rng.uniform(1, 12))
        kind = kinds[int(rng.integers(len(kinds)))]
        if rng.random() < 0.3:
            fp = ((bb[0], bb[1]), (bb[2], bb[1]), (bb[0] + w * rng.uniform(0.2, 0.8), bb[3]))
        else:
            fp = ((bb[0], bb[1]), (bb[2], bb[1]), (bb[2], bb[3]), (bb[0], bb[3]))
        obs.append(Obstacle(fp, base, top, "concrete", kind))
    return make_scene(*obs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fit_scene() -> Scene:
    """Road at y = 30 seen from the origin: open, behind hedge (OLOS) and behind a hall (NLOS)."""
    hedge = box(-60, 10, -20, 14, top=8.0, kind=ObstacleKind.VEGETATION, material="foliage")
    hall = box(20, 10, 60, 20, top=15.0)
    return make_scene(hedge, hall)


def synthetic_samples(scene, tx, rx_cfg, xy, params, bias_db=0.0, noise=None):
    """CW samples whose path loss equals the simulation under ``params`` plus ``bias_db``."""
    from rsuplan.calibration import MeasurementSample, SampleKind
    from rsuplan.propagation import make_solver, received_power_many, receiver_points

    pts = receiver_points(scene, xy, rx_cfg)
    links = received_power_many(make_solver(scene, tx, rx_cfg, params), tx, rx_cfg, pts, params)
    assert links.found.all()
    rss = links.power_dbm - bias_db
    if noise is not None:
        rss = rss + noise
    return [
        MeasurementSample((float(x), float(y)), float(r), SampleKind.CW, tx.config.tx_power_dbm)
        for (x, y), r in zip(np.asarray(xy)[:, :2], rss)
    ]
