"""2.5D environment model: terrain grid, extruded obstacles and materials.

Obstacle heights are given relative to the local ground; the ground level of an
obstacle is the terrain height at its footprint centroid. All geometric
queries are read-only, so a :class:`Scene` can be shared between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _geom
from .errors import DomainError, GeometryError, OutOfTerrainBounds


class ObstacleKind(str, enum.Enum):
    BUILDING = "BUILDING"
    NOISE_BARRIER = "NOISE_BARRIER"
    VEGETATION = "VEGETATION"
    VEHICLE = "VEHICLE"
    OTHER = "OTHER"

    @property
    def default_hard(self) -> bool:
        return self in (ObstacleKind.BUILDING, ObstacleKind.NOISE_BARRIER)


class VisibilityClass(str, enum.Enum):
    LOS = "LOS"
    OLOS = "OLOS"
    NLOS = "NLOS"

    @property
    def code(self) -> int:
        return _CLASS_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "VisibilityClass":
        return _CLASSES[int(code)]


_CLASSES = (VisibilityClass.LOS, VisibilityClass.OLOS, VisibilityClass.NLOS)
_CLASS_CODES = {c: i for i, c in enumerate(_CLASSES)}


@dataclass(frozen=True)
class Material:
    name: str
    relative_permittivity: float = 1.0
    reflection_loss_db: float = 0.0

    def __post_init__(self) -> None:
        if not self.relative_permittivity >= 1.0:
            raise DomainError(f"material {self.name!r}: relative_permittivity must be >= 1")
        if not self.reflection_loss_db >= 0.0:
            raise DomainError(f"material {self.name!r}: reflection_loss_db must be >= 0")


@dataclass(frozen=True)
class Obstacle:
    """Vertical prism over a simple polygon footprint.

    ``hard_blocker`` defaults from ``kind``: buildings and noise barriers
    block hard, vegetation, vehicles and other objects do not.
    """

    footprint: tuple
    base_height: float
    top_height: float
    material: str
    kind: ObstacleKind = ObstacleKind.BUILDING
    hard_blocker: bool | None = None

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.footprint)
        object.__setattr__(self, "footprint", pts)
        object.__setattr__(self, "kind", ObstacleKind(self.kind))
        if self.hard_blocker is None:
            object.__setattr__(self, "hard_blocker", self.kind.default_hard)
        if len(pts) < 3:
            raise GeometryError("obstacle footprint needs at least 3 vertices")
        verts = np.array(pts)
        if abs(_geom.signed_area(verts)) <= _geom.TOL:
            raise GeometryError("obstacle footprint has zero area")
        if not _geom.is_simple(verts):
            raise GeometryError("obstacle footprint is self-intersecting")
        if not (self.top_height > self.base_height >= 0):
            raise GeometryError("obstacle heights must satisfy top > base >= 0")

    @property
    def centroid(self) -> tuple[float, float]:
        v = np.array(self.footprint)
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = cr.sum() / 2.0
        return float(((x + xn) * cr).sum() / (6 * a)), float(((y + yn) * cr).sum() / (6 * a))


@dataclass(frozen=True, eq=False)
class TerrainGrid:
    """Elevation samples on a regular grid.

    ``heights[j, i]`` is the elevation at ``(origin_x + i*cell_size,
    origin_y + j*cell_size)``.
    """

    origin: tuple
    cell_size: float
    heights: np.ndarray

    def __post_init__(self) -> None:
        h = np.array(self.heights, dtype=float)
        if h.ndim != 2 or h.size == 0:
            raise DomainError("terrain heights must be a non-empty rectangular 2D array")
        if not np.all(np.isfinite(h)):
            raise DomainError("terrain heights must be finite")
        if not self.cell_size > 0:
            raise DomainError("terrain cell_size must be > 0")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def extent(self) -> tuple[float, float, float, float]:
        ny, nx = self.heights.shape
        x0, y0 = self.origin
        return x0, y0, x0 + (nx - 1) * self.cell_size, y0 + (ny - 1) * self.cell_size

    def sample(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bilinear heights and an inside-hull mask (heights are 0 outside)."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        ny, nx = self.heights.shape
        fx = (xs - self.origin[0]) / self.cell_size
        fy = (ys - self.origin[1]) / self.cell_size
        eps = _geom.TOL / self.cell_size
        inside = (fx >= -eps) & (fx <= nx - 1 + eps) & (fy >= -eps) & (fy <= ny - 1 + eps)
        fx = np.clip(fx, 0.0, nx - 1)
        fy = np.clip(fy, 0.0, ny - 1)
        i0 = np.minimum(np.floor(fx).astype(int), max(nx - 2, 0))
        j0 = np.minimum(np.floor(fy).astype(int), max(ny - 2, 0))
        i1 = np.minimum(i0 + 1, nx - 1)
        j1 = np.minimum(j0 + 1, ny - 1)
        tx = fx - i0
        ty = fy - j0
        h = self.heights
        z = (
            h[j0, i0] * (1 - tx) * (1 - ty)
            + h[j0, i1] * tx * (1 - ty)
            + h[j1, i0] * (1 - tx) * ty
            + h[j1, i1] * tx * ty
        )
        return np.where(inside, z, 0.0), inside


@dataclass(frozen=True, eq=False)
class Scene:
    obstacles: Sequence[Obstacle] = ()
    materials: Mapping[str, Material] = field(default_factory=dict)
    terrain: TerrainGrid | None = None

    def __post_init__(self) -> None:
        if isinstance(self.materials, Mapping):
            mats = dict(self.materials)
        else:
            mats = {m.name: m for m in self.materials}
        object.__setattr__(self, "materials", mats)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for i, ob in enumerate(self.obstacles):
            if ob.material not in mats:
                raise GeometryError(f"obstacle {i} references unknown material {ob.material!r}")
        prisms = []
        for ob in self.obstacles:
            ground = 0.0
            if self.terrain is not None:
                x0, y0, x1, y1 = self.terrain.extent
                cx, cy = ob.centroid
                z, _ = self.terrain.sample(np.array([min(max(cx, x0), x1)]), np.array([min(max(cy, y0), y1)]))
                ground = float(z[0])
            prisms.append(
                _geom.Prism(np.array(ob.footprint), ground + ob.base_height, ground + ob.top_height)
            )
        object.__setattr__(self, "_prisms", tuple(prisms))
        object.__setattr__(
            self, "_hard", tuple(p for p, ob in zip(prisms, self.obstacles) if ob.hard_blocker)
        )
        object.__setattr__(
            self,
            "_hard_flat",
            tuple(_geom.Prism(p.verts, -np.inf, np.inf) for p in self._hard),
        )

    # -- vectorized queries ------------------------------------------------

    def ground_heights(self, xs, ys) -> np.ndarray:
        """Terrain height at many points; raises outside a present terrain."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        if self.terrain is None:
            return np.zeros(np.broadcast(xs, ys).shape)
        z, inside = self.terrain.sample(xs, ys)
        if not np.all(inside):
            k = int(np.argmin(inside))
            raise OutOfTerrainBounds(
                f"point ({float(np.broadcast_to(xs, z.shape)[k])}, "
                f"{float(np.broadcast_to(ys, z.shape)[k])}) is outside the terrain grid"
            )
        return z

    def _below_terrain(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.zeros(len(a), dtype=bool)
        if self.terrain is None:
            return out
        step = self.terrain.cell_size / 2.0
        horiz = np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1])
        nsamp = np.maximum(1, np.ceil(horiz / step)).astype(int)
        d = b - a
        for k in range(1, int(nsamp.max()) if len(a) else 1):
            idx = np.nonzero((nsamp > k) & ~out)[0]
            if len(idx) == 0:
                continue
            t = k / nsamp[idx]
            p = a[idx] + t[:, None] * d[idx]
            z, inside = self.terrain.sample(p[:, 0], p[:, 1])
            out[idx] |= inside & (p[:, 2] < z - _geom.TOL)
        return out

    def segments_blocked(self, a, b, hard_only: bool = False, terrain: bool = True) -> np.ndarray:
        """Vectorized :func:`segment_blocked_3d` over (N, 3) endpoint arrays."""
        a, b = _geom.canonical_order(np.atleast_2d(np.asarray(a, float)), np.atleast_2d(np.asarray(b, float)))
        prisms = self._hard if hard_only else self._prisms
        out = np.zeros(len(a), dtype=bool)
        for prism in prisms:
            idx = np.nonzero(~out)[0]
            if len(idx) == 0:
                break
            out[idx] |= _geom.segments_hit_prism(a[idx], b[idx], prism)
        if terrain:
            idx = np.nonzero(~out)[0]
            out[idx] |= self._below_terrain(a[idx], b[idx])
        return out

    def footprints_crossed(self, a, b) -> np.ndarray:
        """Whether the 2D projection of each segment enters a hard footprint."""
        a, b = _geom.canonical_order(np.atleast_2d(np.asarray(a, float)), np.atleast_2d(np.asarray(b, float)))
        out = np.zeros(len(a), dtype=bool)
        for prism in self._hard_flat:
            idx = np.nonzero(~out)[0]
            out[idx] |= _geom.segments_hit_prism(a[idx], b[idx], prism)
        return out

    def classify_many(self, a, b) -> np.ndarray:
        """Visibility class codes (0 LOS, 1 OLOS, 2 NLOS) for many pairs."""
        a = np.atleast_2d(np.asarray(a, float))
        b = np.atleast_2d(np.asarray(b, float))
        if len(a) == 1 and len(b) > 1:
            a = np.broadcast_to(a, b.shape)
        blocked = self.segments_blocked(a, b)
        codes = np.zeros(len(b), dtype=np.int8)
        idx = np.nonzero(blocked)[0]
        if len(idx):
            crossed = self.footprints_crossed(a[idx], b[idx])
            codes[idx] = np.where(crossed, 2, 1)
        return codes

    @property
    def hard_prisms(self) -> tuple:
        return self._hard


def terrain_height_at(scene: Scene, p) -> float:
    """Bilinearly interpolated ground elevation at a 2D point (0 without terrain)."""
    return float(scene.ground_heights([p[0]], [p[1]])[0])


def segment_blocked_3d(scene: Scene, a, b, hard_only: bool = False) -> bool:
    """True iff the open segment a-b enters an obstacle volume or dips below ground."""
    if tuple(a) == tuple(b):
        raise DomainError("segment endpoints coincide")
    return bool(scene.segments_blocked([a], [b], hard_only=hard_only)[0])


def classify_visibility(scene: Scene, tx, rx) -> VisibilityClass:
    """LOS when unobstructed, OLOS when only soft objects or terrain obstruct,
    NLOS when the ground track crosses a hard blocker's footprint."""
    if tuple(tx) == tuple(rx):
        raise DomainError("tx and rx coincide")
    return VisibilityClass.from_code(scene.classify_many([tx], [rx])[0])

