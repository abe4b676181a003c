"""Path loss (free space and dominant path model) and dominant path search.

The dominant path is searched over a graph whose nodes are the transmitter,
the receiver and the convex horizontal corners of hard-blocking footprints,
lifted to receiver antenna height above the local ground. The loss of a path
depends on its total length through ``10*p*lg(d)``, on the turns it takes
through the interaction-loss curve, and optionally on a waveguiding credit, so
the search keeps Pareto sets of (length, turn loss, waveguiding) labels per
``(previous corner, corner)`` state instead of running a plain shortest-path
algorithm. The labels do not depend on the path-loss exponents, which lets a
single search serve many exponent sets and many receivers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import _geom
from .antenna import RadioConfig, direction_angles, gain_toward
from .errors import DomainError, NoPathFound
from .scene import Scene, VisibilityClass

SPEED_OF_LIGHT = 299_792_458.0
# 20*lg(4*pi/c0), about -147.55 dB
FSPL_CONSTANT_DB = 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)

_TIE_SCALE = 1e9  # losses equal to 1e-9 dB are ties


@dataclass(frozen=True)
class LossCurve:
    """Monotone piecewise-linear interaction loss versus turn angle."""

    points: tuple = ((0.0, 0.0), (90.0, 8.0), (180.0, 15.0))

    def __post_init__(self) -> None:
        pts = tuple((float(a), float(l)) for a, l in self.points)
        object.__setattr__(self, "points", pts)
        angles = [p[0] for p in pts]
        losses = [p[1] for p in pts]
        if len(pts) < 2 or angles[0] != 0.0 or losses[0] != 0.0:
            raise DomainError("interaction loss curve must start at (0 deg, 0 dB)")
        if angles[-1] < 180.0:
            raise DomainError("interaction loss curve must cover angles up to 180 deg")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise DomainError("interaction loss curve angles must be strictly increasing")
        if any(b < a for a, b in zip(losses, losses[1:])):
            raise DomainError("interaction loss curve must be non-decreasing")

    def __call__(self, delta_phi_deg):
        a = [p[0] for p in self.points]
        l = [p[1] for p in self.points]
        return np.interp(delta_phi_deg, a, l)


@dataclass(frozen=True)
class PathLossParams:
    """Exponents and loss terms of the dominant path model.

    ``waveguiding_gain_db`` is a signed constant added to the loss as is
    (negative values act as a gain). The geometric waveguiding credit is
    disabled while ``waveguiding_kappa`` is 0.
    """

    exponent_los: float = 2.6
    exponent_olos: float = 2.8
    exponent_nlos: float = 3.0
    breakpoint_m: float | None = None
    exponent_after_breakpoint: Mapping[VisibilityClass, float] = field(default_factory=dict)
    interaction_loss_curve: LossCurve = field(default_factory=LossCurve)
    waveguiding_gain_db: float = 0.0
    waveguiding_kappa: float = 0.0
    waveguiding_max_db: float = 6.0
    max_interactions: int | None = None

    speed_of_light = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        after = {VisibilityClass(k): float(v) for k, v in dict(self.exponent_after_breakpoint).items()}
        object.__setattr__(self, "exponent_after_breakpoint", after)
        for p in (self.exponent_los, self.exponent_olos, self.exponent_nlos, *after.values()):
            if not p > 0:
                raise DomainError("path loss exponents must be > 0")
        if self.breakpoint_m is not None and not self.breakpoint_m > 0:
            raise DomainError("breakpoint_m must be > 0")
        if self.waveguiding_kappa < 0 or self.waveguiding_max_db < 0:
            raise DomainError("waveguiding parameters must be >= 0")
        if self.max_interactions is not None and self.max_interactions < 0:
            raise DomainError("max_interactions must be >= 0")

    def exponent(self, visibility: VisibilityClass) -> float:
        return (self.exponent_los, self.exponent_olos, self.exponent_nlos)[VisibilityClass(visibility).code]

    def exponent_after(self, visibility: VisibilityClass) -> float:
        vis = VisibilityClass(visibility)
        return self.exponent_after_breakpoint.get(vis, self.exponent(vis))

    def with_exponents(self, **kw) -> "PathLossParams":
        return replace(self, **kw)

    def search_key(self) -> tuple:
        """Parameters that shape the candidate label sets (exponents do not)."""
        return (
            self.interaction_loss_curve,
            self.waveguiding_kappa,
            self.max_interactions,
        )


DEFAULT_PARAMS = PathLossParams()
# Field-calibrated exponents for LOS/OLOS; the NLOS value carries the OLOS shift.
CALIBRATED_PARAMS = PathLossParams(exponent_los=2.3, exponent_olos=2.9, exponent_nlos=3.1)


@dataclass(frozen=True)
class Interaction:
    at: tuple
    delta_phi_deg: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta_phi_deg <= 180.0:
            raise DomainError("delta_phi_deg must lie in [0, 180]")


@dataclass(frozen=True)
class DominantPath:
    waypoints: tuple
    interactions: tuple
    length_m: float
    visibility: VisibilityClass
    waveguiding_credit_db: float = 0.0

    @classmethod
    def through(
        cls,
        waypoints: Sequence,
        visibility: VisibilityClass,
        waveguiding_credit_db: float = 0.0,
    ) -> "DominantPath":
        """Build a path from its waypoints, deriving length and turn angles."""
        pts = tuple(tuple(float(c) for c in p) for p in waypoints)
        if len(pts) < 2:
            raise DomainError("a path needs at least two waypoints")
        length = sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))
        inter = tuple(
            Interaction(pts[i], turn_angle_deg(pts[i - 1], pts[i], pts[i + 1]))
            for i in range(1, len(pts) - 1)
        )
        return cls(pts, inter, length, VisibilityClass(visibility), waveguiding_credit_db)


@dataclass(frozen=True)
class PathLossBreakdown:
    total_db: float
    free_space_reference_db: float
    distance_term_db: float
    interaction_term_db: float
    waveguiding_db: float
    diverse_losses_db: float = 0.0


def _norm3(v: np.ndarray) -> np.ndarray:
    return np.sqrt(v[..., 0] * v[..., 0] + v[..., 1] * v[..., 1] + v[..., 2] * v[..., 2])


def turn_angle_deg(prev, at, nxt) -> float:
    """Horizontal heading change at ``at`` between the legs in and out, in [0, 180]."""
    ux, uy = at[0] - prev[0], at[1] - prev[1]
    vx, vy = nxt[0] - at[0], nxt[1] - at[1]
    return abs(math.degrees(math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)))


def free_space_pl(frequency_hz, distance_m):
    """Free-space loss in dB; accepts scalars or arrays."""
    f = np.asarray(frequency_hz, dtype=float)
    d = np.asarray(distance_m, dtype=float)
    if not (np.all(f > 0) and np.all(d > 0)):
        raise DomainError("free_space_pl needs positive frequency and distance")
    out = 20.0 * np.log10(d) + 20.0 * np.log10(f) + FSPL_CONSTANT_DB
    return float(out) if out.ndim == 0 else out


def _distance_term(d, p, p_after, breakpoint_m):
    """10*p*lg(d), continued with ``p_after`` beyond the breakpoint."""
    d = np.asarray(d, dtype=float)
    base = 10.0 * p * np.log10(d)
    if breakpoint_m is None:
        return base
    far = 10.0 * p * math.log10(breakpoint_m) + 10.0 * p_after * np.log10(d / breakpoint_m)
    return np.where(d > breakpoint_m, far, base)


def _omega(params: PathLossParams, credit):
    credit = np.asarray(credit, dtype=float)
    return params.waveguiding_gain_db - np.minimum(params.waveguiding_max_db, credit)


def dpm_pl_many(
    length_m,
    visibility,
    params: PathLossParams,
    frequency_hz,
    interaction_db=0.0,
    credit_db=0.0,
) -> np.ndarray:
    """Vectorized total loss for paths given by length, class code and summed turn losses."""
    length_m = np.asarray(length_m, dtype=float)
    codes = np.broadcast_to(np.asarray(visibility, dtype=np.int64), length_m.shape)
    if not np.all(length_m > 0):
        raise DomainError("path length must be > 0")
    f = np.asarray(frequency_hz, dtype=float)
    if not np.all(f > 0):
        raise DomainError("frequency must be > 0")
    p_base = np.array([params.exponent(v) for v in VisibilityClass])[codes]
    p_after = np.array([params.exponent_after(v) for v in VisibilityClass])[codes]
    dist = _distance_term(length_m, p_base, p_after, params.breakpoint_m)
    return 20.0 * np.log10(f) + FSPL_CONSTANT_DB + dist + interaction_db + _omega(params, credit_db)


def dpm_pl(
    path: DominantPath,
    params: PathLossParams,
    frequency_hz: float,
    diverse_losses_db: float = 0.0,
) -> PathLossBreakdown:
    """Dominant-path-model loss of ``path`` with every term reported."""
    if not path.length_m > 0:
        raise DomainError("path length must be > 0")
    if not frequency_hz > 0:
        raise DomainError("frequency must be > 0")
    vis = path.visibility
    fs_ref = 20.0 * math.log10(frequency_hz) + FSPL_CONSTANT_DB
    dist = float(
        _distance_term(path.length_m, params.exponent(vis), params.exponent_after(vis), params.breakpoint_m)
    )
    inter = float(sum(float(params.interaction_loss_curve(i.delta_phi_deg)) for i in path.interactions))
    omega = float(_omega(params, path.waveguiding_credit_db))
    total = fs_ref + dist + inter + omega + diverse_losses_db
    return PathLossBreakdown(total, fs_ref, dist, inter, omega, diverse_losses_db)


def link_budget(
    tx: RadioConfig,
    rx: RadioConfig,
    pl_total_db: float,
    tx_gain_dbi: float,
    rx_gain_dbi: float,
) -> float:
    """Received power in dBm; ``pl_total_db`` already holds all path losses."""
    return tx.tx_power_dbm - tx.cable_loss_db + tx_gain_dbi - pl_total_db + rx_gain_dbi - rx.cable_loss_db


# ---------------------------------------------------------------------------
# dominant path search
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _Label:
    length: float
    turn_db: float
    credit: float
    corners: tuple  # corner indices, in path order
    dead: bool = False


def _dominates(a: _Label, b: _Label) -> bool:
    # waypoint order only arbitrates labels with identical loss components
    if not (a.length <= b.length and a.turn_db <= b.turn_db and a.credit >= b.credit):
        return False
    if a.length < b.length or a.turn_db < b.turn_db or a.credit > b.credit:
        return True
    return a.corners <= b.corners


class DominantPathSolver:
    """Dominant path search from one transmitter position.

    Corner-to-corner visibility and the Pareto label sets are computed once;
    :meth:`solve` then evaluates any number of receivers (at the configured
    height above ground) against them.
    """

    def __init__(
        self,
        scene: Scene,
        tx,
        rx_height_m: float,
        params: PathLossParams = DEFAULT_PARAMS,
        frequency_hz: float = 5.9e9,
    ) -> None:
        if not frequency_hz > 0:
            raise DomainError("frequency must be > 0")
        self.scene = scene
        self.tx = np.array(tx, dtype=float)
        self.rx_height_m = float(rx_height_m)
        self.params = params
        self.frequency_hz = float(frequency_hz)
        self.fs_ref = 20.0 * math.log10(frequency_hz) + FSPL_CONSTANT_DB
        self._walls = self._wall_segments() if params.waveguiding_kappa > 0 else None
        self.corners = self._collect_corners()
        self._build_labels()

    # -- setup -----------------------------------------------------------

    def _collect_corners(self) -> np.ndarray:
        scene = self.scene
        pts = []
        for prism in scene.hard_prisms:
            for i in _geom.convex_corner_indices(prism.verts):
                pts.append(tuple(prism.verts[i]))
        if not pts:
            return np.zeros((0, 3))
        xy = np.array(sorted(set(pts)))
        keep = np.ones(len(xy), dtype=bool)
        if scene.terrain is not None:
            _, inside = scene.terrain.sample(xy[:, 0], xy[:, 1])
            keep &= inside
        xy = xy[keep]
        z = scene.ground_heights(xy[:, 0], xy[:, 1]) + self.rx_height_m if len(xy) else np.zeros(0)
        corners = np.column_stack([xy, z]) if len(xy) else np.zeros((0, 3))
        keep = np.ones(len(corners), dtype=bool)
        for prism in scene.hard_prisms:
            inside = _geom.points_strictly_inside(corners[:, 0], corners[:, 1], prism.verts)
            keep &= ~(inside & (corners[:, 2] > prism.zlo) & (corners[:, 2] < prism.zhi))
        corners = corners[keep]
        order = np.lexsort((corners[:, 2], corners[:, 1], corners[:, 0]))
        return corners[order]

    def _wall_segments(self):
        segs = []
        for prism, ob in zip(self.scene._prisms, self.scene.obstacles):
            if not ob.hard_blocker:
                continue
            rl = self.scene.materials[ob.material].reflection_loss_db
            v = prism.verts
            for p, q in zip(v, np.roll(v, -1, axis=0)):
                segs.append((p[0], p[1], q[0], q[1], 10.0 ** (-rl / 10.0)))
        return np.array(segs) if segs else np.zeros((0, 5))

    def _credit(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Waveguiding credit of segments a-b: kappa * reflectivity * len / wall distance."""
        n = len(a)
        if self._walls is None or len(self._walls) == 0:
            return np.zeros(n)
        mid = 0.5 * (a[:, :2] + b[:, :2])
        w = self._walls
        p = w[:, 0:2]
        e = w[:, 2:4] - p
        elen2 = np.einsum("ij,ij->i", e, e)
        t = ((mid[:, None, 0] - p[:, 0]) * e[:, 0] + (mid[:, None, 1] - p[:, 1]) * e[:, 1]) / elen2
        t = np.clip(t, 0.0, 1.0)
        dx = mid[:, None, 0] - (p[:, 0] + t * e[:, 0])
        dy = mid[:, None, 1] - (p[:, 1] + t * e[:, 1])
        dist = np.sqrt(dx * dx + dy * dy)
        k = np.argmin(dist, axis=1)
        dmin = np.maximum(dist[np.arange(n), k], 1.0)
        refl = w[k, 4]
        seg_len = _norm3(b - a)
        return self.params.waveguiding_kappa * refl * seg_len / dmin

    def _edges_clear(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return ~self.scene.segments_blocked(a, b, hard_only=True, terrain=False)

    def _build_labels(self) -> None:
        c = self.corners
        n = len(c)
        self.labels: list[_Label] = []
        self._labels_at: list[list[_Label]] = [[] for _ in range(n)]
        if n == 0:
            return
        max_int = self.params.max_interactions
        if max_int == 0:
            return
        ii, jj = np.triu_indices(n, k=1)
        vis = np.zeros((n, n), dtype=bool)
        if len(ii):
            clear = self._edges_clear(c[ii], c[jj])
            vis[ii, jj] = clear
            vis[jj, ii] = clear
        self._corner_vis = vis
        seg = _norm3(c[:, None, :] - c[None, :, :])
        credit = np.zeros((n, n))
        if self._walls is not None and len(ii):
            cr = self._credit(c[ii], c[jj])
            credit[ii, jj] = cr
            credit[jj, ii] = cr
        tx_rep = np.broadcast_to(self.tx, c.shape)
        tx_vis = self._edges_clear(tx_rep, c)
        tx_len = _norm3(c - self.tx)
        tx_credit = self._credit(tx_rep, c)
        curve = self.params.interaction_loss_curve

        states: dict[tuple, list[_Label]] = {}
        queue: deque[_Label] = deque()

        def offer(label: _Label) -> None:
            prev = label.corners[-2] if len(label.corners) > 1 else -1
            key = (prev, label.corners[-1])
            bucket = states.setdefault(key, [])
            for other in bucket:
                if _dominates(other, label):
                    return
            for other in bucket:
                if _dominates(label, other):
                    other.dead = True
            bucket[:] = [o for o in bucket if not o.dead]
            bucket.append(label)
            queue.append(label)

        for k in range(n):
            if tx_vis[k] and tx_len[k] > _geom.TOL:
                offer(_Label(float(tx_len[k]), 0.0, float(tx_credit[k]), (k,)))

        while queue:
            lab = queue.popleft()
            if lab.dead:
                continue
            # a label with m corners already implies m interactions once it reaches rx
            if max_int is not None and len(lab.corners) >= max_int:
                continue
            cur = lab.corners[-1]
            prev_pt = self.tx if len(lab.corners) == 1 else c[lab.corners[-2]]
            for nxt in np.nonzero(vis[cur])[0]:
                nxt = int(nxt)
                if nxt in lab.corners or seg[cur, nxt] <= _geom.TOL:
                    continue
                turn = turn_angle_deg(prev_pt, c[cur], c[nxt])
                offer(
                    _Label(
                        lab.length + float(seg[cur, nxt]),
                        lab.turn_db + float(curve(turn)),
                        lab.credit + float(credit[cur, nxt]),
                        lab.corners + (nxt,),
                    )
                )

        alive = [lab for bucket in states.values() for lab in bucket if not lab.dead]
        alive.sort(key=lambda lab: lab.corners)
        self.labels = alive
        for lab in alive:
            self._labels_at[lab.corners[-1]].append(lab)

    # -- evaluation ------------------------------------------------------

    def solve(self, rx_points, params: PathLossParams | None = None) -> "PathBatch":
        """Dominant paths from the transmitter to every receiver point."""
        params = self.params if params is None else params
        if params.search_key() != self.params.search_key():
            raise DomainError("params differ from the solver's in curve/waveguiding/interaction limit")
        rx = np.atleast_2d(np.asarray(rx_points, dtype=float))
        m = len(rx)
        tx = self.tx
        curve = params.interaction_loss_curve

        codes = self.scene.classify_many(tx[None, :], rx).astype(np.int8)
        p_base = np.array([params.exponent(v) for v in VisibilityClass])[codes]
        p_after = np.array([params.exponent_after(v) for v in VisibilityClass])[codes]

        best_q = np.full(m, np.inf)
        best_id = np.full(m, -2, dtype=np.int64)  # -2 none, -1 straight, k label k
        length = np.full(m, np.nan)
        turn_db = np.zeros(m)
        credit = np.zeros(m)
        first_hop = np.tile(rx, 1)  # placeholders, filled below
        last_hop = np.tile(tx, (m, 1))

        def cost(L, G, W, sel):
            dist = _distance_term(L, p_base[sel], p_after[sel], params.breakpoint_m)
            return self.fs_ref + dist + G + _omega(params, W)

        def quantize(x):
            return np.rint(x * _TIE_SCALE)

        # straight candidate
        direct_len = _norm3(rx - tx)
        straight_ok = direct_len > _geom.TOL
        nonlos = np.nonzero((codes != 0) & straight_ok)[0]
        if len(nonlos):
            straight_ok[nonlos] = self._edges_clear(np.broadcast_to(tx, (len(nonlos), 3)), rx[nonlos])
        sidx = np.nonzero(straight_ok)[0]
        if len(sidx):
            W0 = self._credit(np.broadcast_to(tx, (len(sidx), 3)), rx[sidx])
            q = quantize(cost(direct_len[sidx], 0.0, W0, sidx))
            best_q[sidx] = q
            best_id[sidx] = -1
            length[sidx] = direct_len[sidx]
            credit[sidx] = W0

        # corner candidates; LOS receivers short-circuit to the straight segment
        need = np.nonzero((codes != 0) & (direct_len > _geom.TOL))[0]
        if len(need) and self.labels:
            c = self.corners
            label_index = {id(lab): k for k, lab in enumerate(self.labels)}
            for ci in range(len(c)):
                labs = self._labels_at[ci]
                if not labs:
                    continue
                corner = c[ci]
                seg = _norm3(rx[need] - corner)
                cand = need[seg > _geom.TOL]
                if len(cand) == 0:
                    continue
                clear = self._edges_clear(np.broadcast_to(corner, (len(cand), 3)), rx[cand])
                cand = cand[clear]
                if len(cand) == 0:
                    continue
                seg = _norm3(rx[cand] - corner)
                vx = rx[cand, 0] - corner[0]
                vy = rx[cand, 1] - corner[1]
                W_last = self._credit(np.broadcast_to(corner, (len(cand), 3)), rx[cand])
                for lab in labs:
                    prev = tx if len(lab.corners) == 1 else c[lab.corners[-2]]
                    ux, uy = corner[0] - prev[0], corner[1] - prev[1]
                    phi = np.abs(np.degrees(np.arctan2(ux * vy - uy * vx, ux * vx + uy * vy)))
                    L = lab.length + seg
                    G = lab.turn_db + curve(phi)
                    W = lab.credit + W_last
                    q = quantize(cost(L, G, W, cand))
                    better = q < best_q[cand]
                    tie = q == best_q[cand]
                    k = label_index[id(lab)]
                    if tie.any():
                        for j in np.nonzero(tie)[0]:
                            r = cand[j]
                            if self._waypoints_key(k, rx[r]) < self._waypoints_key(int(best_id[r]), rx[r]):
                                better[j] = True
                    upd = cand[better]
                    best_q[upd] = q[better]
                    best_id[upd] = k
                    length[upd] = L[better]
                    turn_db[upd] = G[better]
                    credit[upd] = W[better]

        found = best_id != -2
        for k in np.unique(best_id[best_id >= 0]):
            sel = best_id == k
            corners = self.labels[int(k)].corners
            first_hop[sel] = self.corners[corners[0]]
            last_hop[sel] = self.corners[corners[-1]]
        n_inter = np.zeros(m, dtype=np.int64)
        for k in np.unique(best_id[best_id >= 0]):
            n_inter[best_id == k] = len(self.labels[int(k)].corners)

        dist_term = np.full(m, np.nan)
        omega = np.full(m, np.nan)
        total = np.full(m, np.nan)
        if found.any():
            f = np.nonzero(found)[0]
            dist_term[f] = _distance_term(length[f], p_base[f], p_after[f], params.breakpoint_m)
            omega[f] = _omega(params, credit[f])
            total[f] = dpm_pl_many(length[f], codes[f], params, self.frequency_hz, turn_db[f], credit[f])
        turn_db[~found] = np.nan
        return PathBatch(
            solver=self,
            rx=rx,
            visibility=codes,
            found=found,
            candidate=best_id,
            length_m=length,
            interaction_db=turn_db,
            waveguiding_credit=credit,
            distance_term_db=dist_term,
            waveguiding_db=omega,
            total_db=total,
            free_space_reference_db=self.fs_ref,
            first_hop=first_hop,
            last_hop=last_hop,
            n_interactions=n_inter,
        )

    def _waypoints_key(self, cand_id: int, rx) -> tuple:
        pts = [tuple(self.tx)]
        if cand_id >= 0:
            pts += [tuple(self.corners[i]) for i in self.labels[cand_id].corners]
        pts.append(tuple(rx))
        return tuple(pts)

    def waypoints(self, cand_id: int, rx) -> tuple:
        return self._waypoints_key(cand_id, rx)


@dataclass(eq=False)
class PathBatch:
    """Vectorized dominant-path results for many receivers."""

    solver: DominantPathSolver
    rx: np.ndarray
    visibility: np.ndarray
    found: np.ndarray
    candidate: np.ndarray
    length_m: np.ndarray
    interaction_db: np.ndarray
    waveguiding_credit: np.ndarray
    distance_term_db: np.ndarray
    waveguiding_db: np.ndarray
    total_db: np.ndarray
    free_space_reference_db: float
    first_hop: np.ndarray
    last_hop: np.ndarray
    n_interactions: np.ndarray

    def __len__(self) -> int:
        return len(self.rx)

    def path(self, i: int) -> DominantPath:
        if not self.found[i]:
            raise NoPathFound(f"no dominant path to receiver {tuple(self.rx[i])}")
        pts = self.solver.waypoints(int(self.candidate[i]), self.rx[i])
        return DominantPath.through(
            pts, VisibilityClass.from_code(self.visibility[i]), float(self.waveguiding_credit[i])
        )

    def breakdown(self, i: int) -> PathLossBreakdown:
        if not self.found[i]:
            raise NoPathFound(f"no dominant path to receiver {tuple(self.rx[i])}")
        return PathLossBreakdown(
            float(self.total_db[i]),
            float(self.free_space_reference_db),
            float(self.distance_term_db[i]),
            float(self.interaction_db[i]),
            float(self.waveguiding_db[i]),
            0.0,
        )


def _rx_height(scene: Scene, p) -> float:
    return float(p[2]) - float(scene.ground_heights([p[0]], [p[1]])[0])


def find_dominant_path(
    scene: Scene,
    tx,
    rx,
    params: PathLossParams = DEFAULT_PARAMS,
    frequency_hz: float = 5.9e9,
) -> DominantPath:
    """Loss-minimal path from ``tx`` to ``rx``; raises :class:`NoPathFound`."""
    if tuple(tx) == tuple(rx):
        raise DomainError("tx and rx coincide")
    solver = DominantPathSolver(scene, tx, _rx_height(scene, rx), params, frequency_hz)
    return solver.solve([rx]).path(0)


@dataclass(frozen=True)
class ReceivedPower:
    power_dbm: float
    breakdown: PathLossBreakdown
    path: DominantPath
    tx_gain_dbi: float
    rx_gain_dbi: float


def hop_gains(tx_cfg: RadioConfig, rx_cfg: RadioConfig, tx_pos, first_hop, last_hop, rx_pos) -> tuple[float, float]:
    """Antenna gains toward the first and last path legs."""
    az_t, el_t = direction_angles(tx_pos, first_hop)
    az_r, el_r = direction_angles(rx_pos, last_hop)
    return gain_toward(tx_cfg.pattern, az_t, el_t), gain_toward(rx_cfg.pattern, az_r, el_r)


def received_power(
    scene: Scene,
    tx_config: RadioConfig,
    tx_position,
    rx_config: RadioConfig,
    rx_position,
    params: PathLossParams = DEFAULT_PARAMS,
) -> ReceivedPower:
    """Link budget along the dominant path between two 3D antenna positions."""
    path = find_dominant_path(scene, tx_position, rx_position, params, tx_config.frequency_hz)
    br = dpm_pl(path, params, tx_config.frequency_hz)
    g_t, g_r = hop_gains(tx_config, rx_config, path.waypoints[0], path.waypoints[1], path.waypoints[-2], path.waypoints[-1])
    return ReceivedPower(link_budget(tx_config, rx_config, br.total_db, g_t, g_r), br, path, g_t, g_r)


@dataclass(frozen=True)
class Transmitter:
    """A transmitter site: planar position plus radio configuration."""

    position: tuple
    config: RadioConfig
    name: str = "tx"

    def antenna_point(self, scene: Scene) -> tuple:
        x, y = float(self.position[0]), float(self.position[1])
        return (x, y, terrain_z(scene, x, y) + self.config.antenna_height_m)


def terrain_z(scene: Scene, x: float, y: float) -> float:
    return float(scene.ground_heights([x], [y])[0])


def receiver_points(scene: Scene, xy, rx_config: RadioConfig) -> np.ndarray:
    """Lift planar positions to receiver antenna height above local ground."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))[:, :2]
    z = scene.ground_heights(xy[:, 0], xy[:, 1]) + rx_config.antenna_height_m
    return np.column_stack([xy, z])


@dataclass(eq=False)
class LinkBatch:
    """Received power for many receivers of one transmitter."""

    paths: PathBatch
    power_dbm: np.ndarray
    tx_gain_dbi: np.ndarray
    rx_gain_dbi: np.ndarray
    distance_m: np.ndarray

    @property
    def found(self) -> np.ndarray:
        return self.paths.found

    @property
    def visibility(self) -> np.ndarray:
        return self.paths.visibility


def make_solver(
    scene: Scene, tx: Transmitter, rx_config: RadioConfig, params: PathLossParams = DEFAULT_PARAMS
) -> DominantPathSolver:
    return DominantPathSolver(
        scene, tx.antenna_point(scene), rx_config.antenna_height_m, params, tx.config.frequency_hz
    )


def received_power_many(
    solver: DominantPathSolver,
    tx: Transmitter,
    rx_config: RadioConfig,
    rx_points,
    params: PathLossParams | None = None,
) -> LinkBatch:
    """Vectorized link budget along dominant paths to 3D receiver points."""
    from .antenna import direction_angles_many, gains_toward

    batch = solver.solve(rx_points, params)
    tx_pt = solver.tx
    az_t, el_t = direction_angles_many(tx_pt, batch.first_hop)
    az_r, el_r = direction_angles_many(batch.rx, batch.last_hop)
    g_t = gains_toward(tx.config.pattern, az_t, el_t)
    g_r = gains_toward(rx_config.pattern, az_r, el_r)
    cfg = tx.config
    power = cfg.tx_power_dbm - cfg.cable_loss_db + g_t - batch.total_db + g_r - rx_config.cable_loss_db
    return LinkBatch(batch, power, g_t, g_r, _norm3(batch.rx - tx_pt))
