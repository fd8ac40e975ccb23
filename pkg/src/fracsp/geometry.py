"""Planar domains given by an exact piecewise boundary.

A :class:`Domain` stores its boundary as straight segments and circular arcs.
Distances from points (and from axis-aligned squares) to the boundary are
then computed exactly as a minimum over pieces, with no level-set grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionError, ResolutionError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------- primitives


@dataclass(frozen=True)
class Segment:
    a: tuple[float, float]
    b: tuple[float, float]


@dataclass(frozen=True)
class Arc:
    """Counter-clockwise arc from angle ``start`` spanning ``span`` radians."""

    center: tuple[float, float]
    radius: float
    start: float = 0.0
    span: float = TWO_PI

    @property
    def full(self) -> bool:
        return self.span >= TWO_PI

    def endpoints(self) -> np.ndarray:
        cx, cy = self.center
        t = np.array([self.start, self.start + self.span])
        return np.column_stack([cx + self.radius * np.cos(t), cy + self.radius * np.sin(t)])


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    return pts.reshape(-1, 2)


def point_segment_distance(pts: np.ndarray, a, b) -> np.ndarray:
    a = np.asarray(a, float)
    ab = np.asarray(b, float) - a
    ap = pts - a
    denom = float(ab @ ab)
    t = np.clip((ap @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(pts))
    diff = ap - t[:, None] * ab
    return np.hypot(diff[:, 0], diff[:, 1])


def _angle_in_arc(phi: np.ndarray, arc: Arc) -> np.ndarray:
    if arc.full:
        return np.ones(np.shape(phi), dtype=bool)
    return np.mod(phi - arc.start, TWO_PI) <= arc.span


def point_arc_distance(pts: np.ndarray, arc: Arc) -> np.ndarray:
    c = np.asarray(arc.center, float)
    v = pts - c
    rho = np.hypot(v[:, 0], v[:, 1])
    radial = np.abs(rho - arc.radius)
    if arc.full:
        return radial
    inside = _angle_in_arc(np.arctan2(v[:, 1], v[:, 0]), arc)
    e = arc.endpoints()
    d0 = np.hypot(pts[:, 0] - e[0, 0], pts[:, 1] - e[0, 1])
    d1 = np.hypot(pts[:, 0] - e[1, 0], pts[:, 1] - e[1, 1])
    return np.where(inside, radial, np.minimum(d0, d1))


def point_square_distance(pts: np.ndarray, lo: np.ndarray, side: np.ndarray) -> np.ndarray:
    """Distance from one point per row of ``pts`` to the closed square
    ``[lo, lo + side]``; broadcasting over either argument is allowed."""
    hi = lo + side[..., None]
    gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
    return np.hypot(gap[..., 0], gap[..., 1])


def _square_corners(lo: np.ndarray, side: np.ndarray) -> list[np.ndarray]:
    s = side[:, None]
    return [lo, lo + s * (1.0, 0.0), lo + s * (1.0, 1.0), lo + s * (0.0, 1.0)]


def _segment_hits_square(a, b, lo, side) -> np.ndarray:
    # Liang-Barsky clipping against every square at once.
    a = np.asarray(a, float)
    d = np.asarray(b, float) - a
    hi = lo + side[:, None]
    tmin = np.zeros(len(lo))
    tmax = np.ones(len(lo))
    ok = np.ones(len(lo), dtype=bool)
    for k in range(2):
        if d[k] == 0.0:
            ok &= (a[k] >= lo[:, k]) & (a[k] <= hi[:, k])
        else:
            t1 = (lo[:, k] - a[k]) / d[k]
            t2 = (hi[:, k] - a[k]) / d[k]
            tmin = np.maximum(tmin, np.minimum(t1, t2))
            tmax = np.minimum(tmax, np.maximum(t1, t2))
    return ok & (tmin <= tmax)


def square_segment_distance(lo: np.ndarray, side: np.ndarray, seg: Segment) -> np.ndarray:
    a = np.asarray(seg.a, float)
    b = np.asarray(seg.b, float)
    dist = np.minimum(point_square_distance(a, lo, side), point_square_distance(b, lo, side))
    for corner in _square_corners(lo, side):
        dist = np.minimum(dist, _pairwise_point_segment(corner, a, b))
    dist[_segment_hits_square(a, b, lo, side)] = 0.0
    return dist


def _pairwise_point_segment(pts, a, b):
    return point_segment_distance(pts, a, b)


def _arc_hits_square(lo, side, arc: Arc) -> np.ndarray:
    hi = lo + side[:, None]
    cx, cy = arc.center
    R = arc.radius
    hit = np.zeros(len(lo), dtype=bool)
    for e in arc.endpoints():
        hit |= np.all((e >= lo) & (e <= hi), axis=1)
    # circle crossings with the four edges
    for axis in (0, 1):
        other = 1 - axis
        for fixed in (lo[:, axis], hi[:, axis]):
            off = fixed - (cx if axis == 0 else cy)
            disc = R * R - off * off
            ok = disc >= 0
            root = np.sqrt(np.where(ok, disc, 0.0))
            base = cy if axis == 0 else cx
            for sgn in (-1.0, 1.0):
                t = base + sgn * root
                on_edge = ok & (t >= lo[:, other]) & (t <= hi[:, other])
                if axis == 0:
                    phi = np.arctan2(t - cy, fixed - cx)
                else:
                    phi = np.arctan2(fixed - cy, t - cx)
                hit |= on_edge & _angle_in_arc(phi, arc)
    return hit


def square_arc_distance(lo: np.ndarray, side: np.ndarray, arc: Arc) -> np.ndarray:
    c = np.asarray(arc.center, float)
    hi = lo + side[:, None]
    dist = np.full(len(lo), np.inf)
    if not arc.full:
        for e in arc.endpoints():
            dist = np.minimum(dist, point_square_distance(e, lo, side))
    for corner in _square_corners(lo, side):
        dist = np.minimum(dist, point_arc_distance(corner, arc))
    # foot of the perpendicular from the centre onto each edge
    px = np.clip(c[0], lo[:, 0], hi[:, 0])
    py = np.clip(c[1], lo[:, 1], hi[:, 1])
    for foot in (
        np.column_stack([px, lo[:, 1]]),
        np.column_stack([px, hi[:, 1]]),
        np.column_stack([lo[:, 0], py]),
        np.column_stack([hi[:, 0], py]),
    ):
        dist = np.minimum(dist, point_arc_distance(foot, arc))
    dist[_arc_hits_square(lo, side, arc)] = 0.0
    return dist


# -------------------------------------------------------------------- domain


@dataclass(frozen=True)
class MushroomGeom:
    """Resolved geometry of one mushroom: stem ``[a-rho, a+rho] x [base, chord]``
    and cap disk of radius ``r`` meeting the stem top along a full-width chord."""

    r: float
    a: float
    rho: float
    height: float
    base: float

    @property
    def chord(self) -> float:
        return self.base + self.height

    @property
    def cap_center(self) -> tuple[float, float]:
        return (self.a, self.chord + math.sqrt(self.r**2 - self.rho**2))

    @property
    def segment_area(self) -> float:
        """Area of the cap disk lying below the chord (inside the stem)."""
        h0 = math.sqrt(self.r**2 - self.rho**2)
        return self.r**2 * math.acos(h0 / self.r) - h0 * self.rho

    @property
    def stem_area(self) -> float:
        return 2.0 * self.rho * self.height

    @property
    def cap_area(self) -> float:
        """Part of the mushroom above the chord, where the test function is 1."""
        return math.pi * self.r**2 - self.segment_area

    def in_stem(self, pts: np.ndarray) -> np.ndarray:
        return (
            (np.abs(pts[:, 0] - self.a) <= self.rho)
            & (pts[:, 1] >= self.base)
            & (pts[:, 1] <= self.chord)
        )

    def in_cap(self, pts: np.ndarray) -> np.ndarray:
        cx, cy = self.cap_center
        return np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= self.r

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return self.in_stem(pts) | self.in_cap(pts)


@dataclass(frozen=True)
class MushroomSpec:
    """Cube ``[0, side]^2`` with mushrooms of sizes ``r_list`` on its top side.

    Stem radius is ``r**sigma`` and stem height ``r**h``.  ``attachments``
    gives the stem axes on the top side; when omitted they are laid out left to
    right, separated by the largest stem radius.
    """

    r_list: tuple[float, ...] = ()
    sigma: float = 1.0
    h: float = 1.0
    side: float = 1.0
    attachments: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "r_list", tuple(float(r) for r in self.r_list))
        if self.attachments is not None:
            object.__setattr__(self, "attachments", tuple(float(a) for a in self.attachments))

    def layout(self) -> list[MushroomGeom]:
        rs = self.r_list
        if any(r <= 0 for r in rs):
            raise ConstructionError("mushroom sizes must be positive")
        if any(b >= a for a, b in zip(rs, rs[1:])):
            raise ConstructionError("mushroom sizes must be strictly decreasing")
        rhos = [r**self.sigma for r in rs]
        heights = [r**self.h for r in rs]
        for i, (r, rho, ht) in enumerate(zip(rs, rhos, heights)):
            if rho > r:
                raise ConstructionError(
                    f"mushroom {i}: stem radius {rho} exceeds cap radius {r}", index=i
                )
            if r - math.sqrt(r * r - rho * rho) > ht:
                raise ConstructionError(
                    f"mushroom {i}: cap reaches below the stem base", index=i
                )
        gap = max(rhos) if rhos else 0.0
        if self.attachments is None:
            pos = []
            for i, r in enumerate(rs):
                if i == 0:
                    pos.append(gap + rhos[0])
                else:
                    pos.append(pos[-1] + rs[i - 1] + r + gap)
        else:
            if len(self.attachments) != len(rs):
                raise ConstructionError("one attachment position per mushroom is required")
            pos = list(self.attachments)
        geoms = [
            MushroomGeom(r=r, a=a, rho=rho, height=ht, base=self.side)
            for r, a, rho, ht in zip(rs, pos, rhos, heights)
        ]
        for i, g in enumerate(geoms):
            if g.a - g.rho < gap - 1e-15 or g.a + g.rho > self.side - gap + 1e-15:
                raise ConstructionError(
                    f"mushroom {i}: stem does not fit on the top side with gap {gap}",
                    index=i,
                )
        order = np.argsort([g.a for g in geoms])
        for u, v in zip(order, order[1:]):
            gu, gv = geoms[u], geoms[v]
            if gv.a - gu.a <= gu.r + gv.r:
                raise ConstructionError(
                    f"mushrooms {int(u)} and {int(v)} overlap", pair=[int(u), int(v)]
                )
            if (gv.a - gv.rho) - (gu.a + gu.rho) < gap - 1e-15:
                raise ConstructionError(
                    f"stems {int(u)} and {int(v)} are closer than {gap}", pair=[int(u), int(v)]
                )
        return geoms


@dataclass(frozen=True, eq=False)
class Domain:
    """Bounded open planar domain with exact boundary pieces.

    ``closed_member`` tests membership in the closure; interior membership is
    closure membership plus positive distance to the boundary.
    """

    name: str
    segments: tuple[Segment, ...]
    arcs: tuple[Arc, ...]
    closed_member: Callable[[np.ndarray], np.ndarray]
    bbox: tuple[tuple[float, float], tuple[float, float]]
    x0: tuple[float, float]
    measure: float | None = None
    n: int = 2
    mushrooms: tuple[MushroomGeom, ...] = ()
    spec: dict = field(default_factory=dict)

    def boundary_distance(self, x) -> np.ndarray:
        """Unsigned distance to the boundary, valid inside and outside."""
        pts = _as_points(x)
        d = np.full(len(pts), np.inf)
        for seg in self.segments:
            d = np.minimum(d, point_segment_distance(pts, seg.a, seg.b))
        for arc in self.arcs:
            d = np.minimum(d, point_arc_distance(pts, arc))
        return d

    def contains(self, x) -> np.ndarray:
        pts = _as_points(x)
        return self.closed_member(pts) & (self.boundary_distance(pts) > 0)

    def dist(self, x) -> np.ndarray:
        """``d(x, boundary)`` inside the domain, 0 elsewhere."""
        pts = _as_points(x)
        d = self.boundary_distance(pts)
        return np.where(self.closed_member(pts) & (d > 0), d, 0.0)

    def square_distance(self, lo: np.ndarray, side: np.ndarray) -> np.ndarray:
        """Exact distance from closed axis-aligned squares to the boundary."""
        lo = np.asarray(lo, float).reshape(-1, 2)
        side = np.broadcast_to(np.asarray(side, float), (len(lo),)).copy()
        d = np.full(len(lo), np.inf)
        for seg in self.segments:
            d = np.minimum(d, square_segment_distance(lo, side, seg))
        for arc in self.arcs:
            d = np.minimum(d, square_arc_distance(lo, side, arc))
        return d


def dist_to_boundary(domain: Domain, x) -> np.ndarray | float:
    """Exact Euclidean distance to the boundary; 0 outside the domain."""
    d = domain.dist(x)
    return float(d[0]) if np.ndim(x) == 1 else d


def _box_segments(lo, hi) -> tuple[Segment, ...]:
    (x0, y0), (x1, y1) = lo, hi
    return (
        Segment((x0, y0), (x1, y0)),
        Segment((x1, y0), (x1, y1)),
        Segment((x1, y1), (x0, y1)),
        Segment((x0, y1), (x0, y0)),
    )


def rectangle(lo=(0.0, 0.0), hi=(1.0, 1.0), x0=None, name="rectangle") -> Domain:
    lo = (float(lo[0]), float(lo[1]))
    hi = (float(hi[0]), float(hi[1]))
    if not (hi[0] > lo[0] and hi[1] > lo[1]):
        raise ConstructionError("rectangle needs hi > lo")
    if x0 is None:
        x0 = ((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2)
    lo_a, hi_a = np.array(lo), np.array(hi)

    def member(pts):
        return np.all((pts >= lo_a) & (pts <= hi_a), axis=1)

    dom = Domain(
        name=name,
        segments=_box_segments(lo, hi),
        arcs=(),
        closed_member=member,
        bbox=(lo, hi),
        x0=(float(x0[0]), float(x0[1])),
        measure=(hi[0] - lo[0]) * (hi[1] - lo[1]),
        spec={"type": name, "lo": list(lo), "hi": list(hi), "x0": list(x0)},
    )
    _check_base_point(dom)
    return dom


def square(side: float = 1.0, x0=None) -> Domain:
    """The square ``(0, side)^2``; base point at its centre by default."""
    dom = rectangle((0.0, 0.0), (side, side), x0=x0, name="square")
    object.__setattr__(dom, "spec", {"type": "square", "side": side, "x0": list(dom.x0)})
    return dom


def half_plane(width: float = 20.0, height: float = 10.0, x0=(0.0, 1.0)) -> Domain:
    """Upper half-plane clipped to ``[-width/2, width/2] x (0, height)``."""
    dom = rectangle((-width / 2, 0.0), (width / 2, height), x0=x0, name="halfplane")
    object.__setattr__(
        dom, "spec", {"type": "halfplane", "width": width, "height": height, "x0": list(dom.x0)}
    )
    return dom


def disk(radius: float = 1.0, center=(0.0, 0.0), x0=None) -> Domain:
    c = np.array(center, float)
    if x0 is None:
        x0 = tuple(center)

    def member(pts):
        return np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= radius

    dom = Domain(
        name="disk",
        segments=(),
        arcs=(Arc((float(c[0]), float(c[1])), float(radius)),),
        closed_member=member,
        bbox=((c[0] - radius, c[1] - radius), (c[0] + radius, c[1] + radius)),
        x0=(float(x0[0]), float(x0[1])),
        measure=math.pi * radius**2,
        spec={"type": "disk", "radius": radius, "center": list(center), "x0": list(x0)},
    )
    _check_base_point(dom)
    return dom


def make_mushroom(spec: MushroomSpec, x0=None) -> Domain:
    """Cube with cap-and-stem protrusions on its top side.

    Raises :class:`ConstructionError` naming the offending pair when two
    mushrooms overlap.
    """
    S = float(spec.side)
    geoms = spec.layout()
    if not geoms:
        dom = square(S, x0=x0)
        object.__setattr__(dom, "spec", {"type": "mushroom", **_spec_dict(spec)})
        return dom
    segs = [
        Segment((0.0, 0.0), (S, 0.0)),
        Segment((S, 0.0), (S, S)),
        Segment((0.0, S), (0.0, 0.0)),
    ]
    # top side with the stem mouths removed
    cursor = 0.0
    for g in sorted(geoms, key=lambda g: g.a):
        segs.append(Segment((cursor, S), (g.a - g.rho, S)))
        cursor = g.a + g.rho
    segs.append(Segment((cursor, S), (S, S)))
    arcs = []
    for g in geoms:
        segs.append(Segment((g.a - g.rho, g.base), (g.a - g.rho, g.chord)))
        segs.append(Segment((g.a + g.rho, g.base), (g.a + g.rho, g.chord)))
        cx, cy = g.cap_center
        h0 = cy - g.chord
        right = math.atan2(-h0, g.rho)
        left = math.atan2(-h0, -g.rho)
        arcs.append(Arc((cx, cy), g.r, start=right, span=TWO_PI - (right - left)))

    def member(pts):
        inside = (pts[:, 0] >= 0) & (pts[:, 0] <= S) & (pts[:, 1] >= 0) & (pts[:, 1] <= S)
        for g in geoms:
            inside |= g.contains(pts)
        return inside

    xs = [0.0, S] + [g.a - g.r for g in geoms] + [g.a + g.r for g in geoms]
    ys = [0.0, S] + [g.cap_center[1] + g.r for g in geoms]
    measure = S * S + sum(g.stem_area + g.cap_area for g in geoms)
    if x0 is None:
        x0 = (S / 2, S / 2)
    dom = Domain(
        name="mushroom",
        segments=tuple(segs),
        arcs=tuple(arcs),
        closed_member=member,
        bbox=((min(xs), min(ys)), (max(xs), max(ys))),
        x0=(float(x0[0]), float(x0[1])),
        measure=measure,
        mushrooms=tuple(geoms),
        spec={"type": "mushroom", **_spec_dict(spec), "x0": list(x0)},
    )
    _check_base_point(dom)
    return dom


def _spec_dict(spec: MushroomSpec) -> dict:
    return {
        "side": spec.side,
        "r_list": list(spec.r_list),
        "sigma": spec.sigma,
        "h": spec.h,
        "attachments": None if spec.attachments is None else list(spec.attachments),
    }


def _check_base_point(dom: Domain):
    if not dom.dist(np.array(dom.x0))[0] > 0:
        raise ConstructionError("base point x0 must be interior", x0=list(dom.x0))


def domain_from_config(cfg: dict) -> Domain:
    """Build a domain from ``{"type": ..., ...}`` as used in run configs."""
    kind = cfg.get("type")
    x0 = cfg.get("x0")
    if kind == "square":
        return square(cfg.get("side", 1.0), x0=x0)
    if kind == "disk":
        return disk(cfg.get("radius", 1.0), cfg.get("center", (0.0, 0.0)), x0=x0)
    if kind == "halfplane":
        return half_plane(cfg.get("width", 20.0), cfg.get("height", 10.0), x0=x0 or (0.0, 1.0))
    if kind == "rectangle":
        return rectangle(cfg["lo"], cfg["hi"], x0=x0)
    if kind == "mushroom":
        spec = MushroomSpec(
            r_list=tuple(cfg.get("r_list", ())),
            sigma=cfg.get("sigma", 1.0),
            h=cfg.get("h", 1.0),
            side=cfg.get("side", 1.0),
            attachments=None if cfg.get("attachments") is None else tuple(cfg["attachments"]),
        )
        return make_mushroom(spec, x0=x0)
    raise ConstructionError(f"unknown domain type {kind!r}")


# --------------------------------------------------------------- grid nodes


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Lattice nodes ``origin + (i, j) * h`` of a domain, row-major ordered.

    Only nodes with ``d >= h/2`` are kept.  The lattice is anchored at the
    lower-left corner of the domain's bounding box, so windows of the same
    domain share nodes exactly.
    """

    domain: Domain
    h: float
    origin: tuple[float, float]
    ij: np.ndarray
    points: np.ndarray
    d: np.ndarray

    def __len__(self):
        return len(self.points)

    @property
    def cell_measure(self) -> float:
        return self.h**self.domain.n

    @property
    def measure(self) -> float:
        return len(self) * self.cell_measure

    def lattice(self):
        """Dense index array covering the node bounding box (-1 = no node)."""
        i0, j0 = self.ij.min(axis=0)
        i1, j1 = self.ij.max(axis=0)
        grid = np.full((j1 - j0 + 1, i1 - i0 + 1), -1, dtype=np.int64)
        grid[self.ij[:, 1] - j0, self.ij[:, 0] - i0] = np.arange(len(self))
        return grid, (int(i0), int(j0))

    def subset(self, mask: np.ndarray) -> "NodeSet":
        return NodeSet(self.domain, self.h, self.origin, self.ij[mask], self.points[mask], self.d[mask])


def sample_interior(domain: Domain, h_grid: float, window=None, chunk_rows: int = 256) -> NodeSet:
    """Uniform lattice nodes with ``d >= h_grid/2``.

    ``window`` (``((xlo, ylo), (xhi, yhi))``) restricts the lattice to a
    sub-rectangle; distances are still those of the full domain.
    """
    if not h_grid > 0:
        raise ResolutionError("h_grid must be positive", h_grid=h_grid)
    (bx0, by0), (bx1, by1) = domain.bbox
    (wx0, wy0), (wx1, wy1) = window if window is not None else domain.bbox
    wx0, wy0 = max(wx0, bx0), max(wy0, by0)
    wx1, wy1 = min(wx1, bx1), min(wy1, by1)
    i_lo = max(int(math.ceil((wx0 - bx0) / h_grid - 1e-9)), 0)
    i_hi = int(math.floor((wx1 - bx0) / h_grid + 1e-9))
    j_lo = max(int(math.ceil((wy0 - by0) / h_grid - 1e-9)), 0)
    j_hi = int(math.floor((wy1 - by0) / h_grid + 1e-9))
    ii = np.arange(i_lo, i_hi + 1)
    keep_ij, keep_pts, keep_d = [], [], []
    for jstart in range(j_lo, j_hi + 1, chunk_rows):
        jj = np.arange(jstart, min(jstart + chunk_rows, j_hi + 1))
        J, I = np.meshgrid(jj, ii, indexing="ij")
        pts = np.column_stack([bx0 + I.ravel() * h_grid, by0 + J.ravel() * h_grid])
        d = domain.dist(pts)
        ok = d >= h_grid / 2
        keep_ij.append(np.column_stack([I.ravel()[ok], J.ravel()[ok]]))
        keep_pts.append(pts[ok])
        keep_d.append(d[ok])
    ij = np.concatenate(keep_ij) if keep_ij else np.zeros((0, 2), np.int64)
    if len(ij) == 0:
        raise ResolutionError("resolution too coarse for domain", h_grid=h_grid, domain=domain.name)
    return NodeSet(
        domain=domain,
        h=float(h_grid),
        origin=(float(bx0), float(by0)),
        ij=ij.astype(np.int64),
        points=np.concatenate(keep_pts),
        d=np.concatenate(keep_d),
    )


def monte_carlo_area(domain: Domain, samples: int = 10**6, seed: int = 0, chunk: int = 10**6) -> float:
    """Bounding-box Monte-Carlo estimate of ``|domain|``."""
    rng = np.random.default_rng(seed)
    (x0, y0), (x1, y1) = domain.bbox
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = rng.uniform((x0, y0), (x1, y1), size=(m, 2))
        hits += int(np.count_nonzero(domain.contains(pts)))
        done += m
    return hits / samples * (x1 - x0) * (y1 - y0)


def densify_boundary(domain: Domain, step: float) -> np.ndarray:
    """Boundary points spaced at most ``step`` apart (for brute-force oracles)."""
    out = []
    for seg in domain.segments:
        a, b = np.array(seg.a), np.array(seg.b)
        m = max(int(math.ceil(np.hypot(*(b - a)) / step)), 1)
        t = np.linspace(0.0, 1.0, m + 1)[:, None]
        out.append(a + t * (b - a))
    for arc in domain.arcs:
        m = max(int(math.ceil(arc.radius * arc.span / step)), 1)
        t = arc.start + np.linspace(0.0, arc.span, m + 1)
        cx, cy = arc.center
        out.append(np.column_stack([cx + arc.radius * np.cos(t), cy + arc.radius * np.sin(t)]))
    return np.concatenate(out)


def points_in(domain: Domain, pts: Sequence) -> np.ndarray:
    return domain.contains(np.asarray(pts, float))
