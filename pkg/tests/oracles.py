"""Independent reference implementations used to cross-check the package.

Nothing here calls into the code under test except for plain data access
(obstacle footprints, heights) and, in the path oracle, the leg-visibility
predicate, which has its own brute-force check in the scene tests.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

C0 = 299_792_458.0


def point_in_polygon(x: float, y: float, poly) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def sampled_blocked(obstacles, a, b, step: float = 0.01, hard_only: bool = False) -> bool:
    """Sample the open segment every ``step`` meters and test point-in-prism (flat ground)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.linalg.norm(b - a))
    n = max(2, int(math.ceil(length / step)))
    ts = (np.arange(1, n) / n)
    pts = a + ts[:, None] * (b - a)
    for ob in obstacles:
        if hard_only and not ob.hard_blocker:
            continue
        xs = [v[0] for v in ob.footprint]
        ys = [v[1] for v in ob.footprint]
        for x, y, z in pts:
            if not (ob.base_height < z < ob.top_height):
                continue
            if not (min(xs) <= x <= max(xs) and min(ys) <= y <= max(ys)):
                continue
            if point_in_polygon(x, y, ob.footprint):
                return True
    return False


def free_space_db(f: float, d: float) -> float:
    return 20 * math.log10(d) + 20 * math.log10(f) + 20 * math.log10(4 * math.pi / C0)


def interp_curve(points, x: float) -> float:
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return points[-1][1]


def turn_deg(p, q, r) -> float:
    ux, uy = q[0] - p[0], q[1] - p[1]
    vx, vy = r[0] - q[0], r[1] - q[1]
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return abs(math.degrees(math.atan2(cross, dot)))


def path_cost(waypoints, f: float, p: float, curve) -> float:
    length = sum(math.dist(a, b) for a, b in zip(waypoints, waypoints[1:]))
    turns = sum(interp_curve(curve, turn_deg(*waypoints[i - 1 : i + 2])) for i in range(1, len(waypoints) - 1))
    return 20 * math.log10(f) + 20 * math.log10(4 * math.pi / C0) + 10 * p * math.log10(length) + turns


def convex_corners(poly):
    """Strictly convex vertices of a simple polygon in either orientation."""
    pts = [tuple(map(float, v)) for v in poly]
    area = sum(x1 * y2 - x2 * y1 for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]))
    sign = 1 if area > 0 else -1
    out = []
    n = len(pts)
    for i in range(n):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
        cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if sign * cr > 1e-9:
            out.append(b)
    return out


def best_corner_path(scene, tx, rx, rx_height: float, f: float, p: float, curve, leg_blocked, max_turns: int = 3):
    """Minimum cost over every simple corner sequence of length <= ``max_turns``.

    Returns ``(cost, waypoints)`` or ``None`` when no sequence is open.
    """
    corners = sorted({c for ob in scene.obstacles if ob.hard_blocker for c in convex_corners(ob.footprint)})
    nodes = [(x, y, rx_height) for x, y in corners]
    best = None
    for k in range(0, max_turns + 1):
        for seq in itertools.permutations(nodes, k):
            wps = [tuple(tx), *seq, tuple(rx)]
            if k == 0 and leg_blocked(wps[0], wps[1]):
                continue
            if k > 0 and any(leg_blocked(a, b) for a, b in zip(wps, wps[1:])):
                continue
            cost = path_cost(wps, f, p, curve)
            if best is None or cost < best[0]:
                best = (cost, wps)
    return best


def coverage_radius(p_t: float, g_t: float, g_r: float, threshold: float, f: float, p: float) -> float:
    """Distance at which a LOS link budget reaches ``threshold`` (closed form)."""
    return 10 ** ((p_t + g_t + g_r - threshold - 20 * math.log10(f) + 147.55221677811664) / (10 * p))
