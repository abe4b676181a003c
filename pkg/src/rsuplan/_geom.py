"""Vectorized planar/prism intersection kernels.

All routines operate elementwise on arrays of segments so that a result for a
given segment never depends on which other segments share the batch. Scalar
queries go through the same code with arrays of length one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL = 1e-9


def signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    return (
        min(p[0], q[0]) - TOL <= r[0] <= max(p[0], q[0]) + TOL
        and min(p[1], q[1]) - TOL <= r[1] <= max(p[1], q[1]) + TOL
    )


def _segments_touch(p1, p2, p3, p4) -> bool:
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if abs(d1) <= TOL and _on_segment(p3, p4, p1):
        return True
    if abs(d2) <= TOL and _on_segment(p3, p4, p2):
        return True
    if abs(d3) <= TOL and _on_segment(p1, p2, p3):
        return True
    if abs(d4) <= TOL and _on_segment(p1, p2, p4):
        return True
    return False


def is_simple(verts: np.ndarray) -> bool:
    """True when no two non-adjacent polygon edges touch."""
    n = len(verts)
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        if np.allclose(a1, a2, atol=TOL, rtol=0.0):
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_touch(a1, a2, verts[j], verts[(j + 1) % n]):
                return False
    return True


def convex_corner_indices(verts: np.ndarray) -> list[int]:
    """Indices of strictly convex vertices of a counter-clockwise polygon."""
    n = len(verts)
    out = []
    for i in range(n):
        if _orient(verts[i - 1], verts[i], verts[(i + 1) % n]) > TOL:
            out.append(i)
    return out


@dataclass(frozen=True, eq=False)
class Prism:
    """Extruded footprint in absolute coordinates, vertices counter-clockwise."""

    verts: np.ndarray
    zlo: float
    zhi: float
    convex: bool = field(init=False)
    bbox: tuple = field(init=False)
    _normals: np.ndarray = field(init=False, repr=False)
    _offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.verts, dtype=float)
        if signed_area(v) < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "verts", v)
        object.__setattr__(self, "convex", len(convex_corner_indices(v)) == len(v))
        object.__setattr__(
            self, "bbox", (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())
        )
        e = np.roll(v, -1, axis=0) - v
        lengths = np.hypot(e[:, 0], e[:, 1])
        normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
        object.__setattr__(self, "_normals", normals)
        object.__setattr__(self, "_offsets", np.einsum("ij,ij->i", normals, v))


def canonical_order(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Swap endpoints so that ``a`` is lexicographically smaller than ``b``.

    Makes every segment predicate exactly symmetric in its endpoints.
    """
    swap = (a[:, 0] > b[:, 0]) | (
        (a[:, 0] == b[:, 0])
        & ((a[:, 1] > b[:, 1]) | ((a[:, 1] == b[:, 1]) & (a[:, 2] > b[:, 2])))
    )
    a2 = np.where(swap[:, None], b, a)
    b2 = np.where(swap[:, None], a, b)
    return a2, b2


def _z_overlap(az, dz, t0, t1, zlo, zhi):
    z0 = az + t0 * dz
    z1 = az + t1 * dz
    return (np.minimum(z0, z1) < zhi - TOL) & (np.maximum(z0, z1) > zlo + TOL)


def _hits_convex(a, b, prism: Prism) -> np.ndarray:
    d = b - a
    nx = prism._normals[:, 0]
    ny = prism._normals[:, 1]
    num = a[:, 0:1] * nx + a[:, 1:2] * ny - prism._offsets  # (N, E)
    den = d[:, 0:1] * nx + d[:, 1:2] * ny
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = (-TOL - num) / den
    upper = np.where(den > 0, bound, np.inf)
    lower = np.where(den < 0, bound, -np.inf)
    parallel_out = (den == 0) & (num >= -TOL)
    t_lo = np.maximum(0.0, lower.max(axis=1))
    t_hi = np.minimum(1.0, upper.min(axis=1))
    hit = (t_hi > t_lo) & ~parallel_out.any(axis=1)
    if prism.zlo == -np.inf and prism.zhi == np.inf:
        return hit
    return hit & _z_overlap(a[:, 2], d[:, 2], t_lo, t_hi, prism.zlo, prism.zhi)


def points_strictly_inside(px: np.ndarray, py: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Even-odd containment excluding a ``TOL`` band around the boundary."""
    p = verts
    q = np.roll(verts, -1, axis=0)
    x = px[..., None]
    y = py[..., None]
    cond = (p[:, 1] > y) != (q[:, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = p[:, 0] + (y - p[:, 1]) * (q[:, 0] - p[:, 0]) / (q[:, 1] - p[:, 1])
    inside = (np.count_nonzero(cond & (x < xcross), axis=-1) % 2) == 1
    e = q - p
    elen2 = np.einsum("ij,ij->i", e, e)
    t = ((x - p[:, 0]) * e[:, 0] + (y - p[:, 1]) * e[:, 1]) / elen2
    t = np.clip(t, 0.0, 1.0)
    dx = x - (p[:, 0] + t * e[:, 0])
    dy = y - (p[:, 1] + t * e[:, 1])
    near = (dx * dx + dy * dy).min(axis=-1) <= TOL * TOL
    return inside & ~near


def _hits_general(a, b, prism: Prism) -> np.ndarray:
    v = prism.verts
    p = v
    e = np.roll(v, -1, axis=0) - v
    d = (b - a)[:, :2]
    ap = p[None, :, :] - a[:, None, :2]  # (N, E, 2)
    denom = d[:, 0:1] * e[None, :, 1] - d[:, 1:2] * e[None, :, 0]
    cross_ape = ap[..., 0] * e[None, :, 1] - ap[..., 1] * e[None, :, 0]
    cross_apd = ap[..., 0] * d[:, 1:2] - ap[..., 1] * d[:, 0:1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_edge = cross_ape / denom
        s_edge = cross_apd / denom
    ok = (denom != 0) & (t_edge >= 0) & (t_edge <= 1) & (s_edge >= -TOL) & (s_edge <= 1 + TOL)
    t_edge = np.where(ok, t_edge, np.nan)

    dlen2 = (d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])[:, None]
    perp = np.abs(ap[..., 0] * d[:, 1:2] - ap[..., 1] * d[:, 0:1]) / np.sqrt(dlen2)
    t_vert = (ap[..., 0] * d[:, 0:1] + ap[..., 1] * d[:, 1:2]) / dlen2
    okv = (perp <= TOL) & (t_vert >= 0) & (t_vert <= 1)
    t_vert = np.where(okv, t_vert, np.nan)

    n = len(a)
    ts = np.concatenate([np.zeros((n, 1)), t_edge, t_vert, np.ones((n, 1))], axis=1)
    ts.sort(axis=1)
    t0 = ts[:, :-1]
    t1 = ts[:, 1:]
    valid = np.isfinite(t0) & np.isfinite(t1) & ((t1 - t0) * np.sqrt(dlen2) > TOL)
    tm = 0.5 * (t0 + t1)
    mx = a[:, 0:1] + tm * d[:, 0:1]
    my = a[:, 1:2] + tm * d[:, 1:2]
    inside = np.zeros_like(valid)
    if valid.any():
        inside[valid] = points_strictly_inside(mx[valid], my[valid], v)
    if not (prism.zlo == -np.inf and prism.zhi == np.inf):
        dz = (b[:, 2] - a[:, 2])[:, None]
        inside &= _z_overlap(a[:, 2:3], dz, t0, t1, prism.zlo, prism.zhi)
    return inside.any(axis=1)


def _hits_vertical(a, b, prism: Prism) -> np.ndarray:
    inside = points_strictly_inside(a[:, 0], a[:, 1], prism.verts)
    zero = np.zeros(len(a))
    return inside & _z_overlap(a[:, 2], b[:, 2] - a[:, 2], zero, zero + 1.0, prism.zlo, prism.zhi)


def segments_hit_prism(a: np.ndarray, b: np.ndarray, prism: Prism) -> np.ndarray:
    """Whether each open segment ``a[i]``-``b[i]`` enters the open prism volume.

    ``a`` and ``b`` are (N, 3) arrays already put in :func:`canonical_order`.
    """
    out = np.zeros(len(a), dtype=bool)
    x0, y0, x1, y1 = prism.bbox
    cand = ~(
        (np.maximum(a[:, 0], b[:, 0]) < x0 - TOL)
        | (np.minimum(a[:, 0], b[:, 0]) > x1 + TOL)
        | (np.maximum(a[:, 1], b[:, 1]) < y0 - TOL)
        | (np.minimum(a[:, 1], b[:, 1]) > y1 + TOL)
    )
    if prism.zhi != np.inf or prism.zlo != -np.inf:
        cand &= np.minimum(a[:, 2], b[:, 2]) < prism.zhi - TOL
        cand &= np.maximum(a[:, 2], b[:, 2]) > prism.zlo + TOL
    idx = np.nonzero(cand)[0]
    if len(idx) == 0:
        return out
    if prism.convex:
        out[idx] = _hits_convex(a[idx], b[idx], prism)
        return out
    vertical = (a[idx, 0] == b[idx, 0]) & (a[idx, 1] == b[idx, 1])
    iv, ig = idx[vertical], idx[~vertical]
    if len(iv):
        out[iv] = _hits_vertical(a[iv], b[iv], prism)
    if len(ig):
        out[ig] = _hits_general(a[ig], b[ig], prism)
    return out
