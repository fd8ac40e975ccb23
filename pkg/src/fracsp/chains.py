"""Chains of balls from ``x0`` to a target point along a discrete
quasihyperbolic geodesic, with an empirical check of the six chain
properties (overlap, approach rate, boundary clearance, bounded overlap,
centre distance, radius counts)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError
from .geometry import Domain
from .io import write_csv
from .quasihyperbolic import QhGraph, qh_geodesic


@dataclass(frozen=True, eq=False)
class BallChain:
    """Balls ``B_i = B(centers[i], radii[i])``; ``B_0`` sits at ``x0`` and the
    terminal ball at the target ``x``."""

    domain: Domain
    x: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    s: float
    M: float

    @property
    def k(self) -> int:
        return len(self.radii) - 1

    def csv_rows(self):
        for i, (c, r) in enumerate(zip(self.centers, self.radii)):
            yield (i, float(c[0]), float(c[1]), float(r))

    def to_csv(self, path):
        return write_csv(path, ["i", "x", "y", "r"], self.csv_rows())


def build_chain(
    domain: Domain,
    x,
    s: float,
    M: float,
    h_grid: float,
    graph: QhGraph | None = None,
) -> BallChain:
    """Balls of radius ``d/(4M)`` centred along the geodesic from ``x0`` to ``x``.

    Consecutive centres are at most ``r_i / (2 + 1/(4M))`` apart in arc
    length; since ``d`` is 1-Lipschitz this keeps them within half of the
    smaller radius of the pair.
    """
    if not M > 1:
        raise DomainError("chain parameter M must exceed 1", constraint="M > 1", M=M)
    x = np.asarray(x, float)
    x0 = np.asarray(domain.x0, float)
    if not domain.dist(x)[0] > 0:
        raise DomainError("chain target must be interior", x=x.tolist())
    if np.array_equal(x, x0):
        r = float(domain.dist(x0)[0]) / (4 * M)
        return BallChain(domain, x, x0.reshape(1, 2), np.array([r]), s, M)
    geo = qh_geodesic(domain, x0, x, h_grid, graph=graph)
    pts = geo.points
    seg = np.hypot(*np.diff(pts, axis=0).T)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    factor = 2.0 + 1.0 / (4.0 * M)
    centers = [x0]
    radii = [float(domain.dist(x0)[0]) / (4 * M)]
    t = 0.0
    while True:
        t += radii[-1] / factor
        if t >= total:
            break
        j = int(np.searchsorted(arc, t, side="right") - 1)
        j = min(j, len(seg) - 1)
        lam = (t - arc[j]) / seg[j] if seg[j] > 0 else 0.0
        c = pts[j] + lam * (pts[j + 1] - pts[j])
        d = float(domain.dist(c)[0])
        if not d > 0:
            raise DomainError("geodesic left the domain; use a finer h_grid", point=c.tolist())
        centers.append(c)
        radii.append(d / (4 * M))
    centers.append(x)
    radii.append(float(domain.dist(x)[0]) / (4 * M))
    return BallChain(domain, x, np.array(centers), np.array(radii), s, M)


def lens_area(r1, r2, dist) -> np.ndarray:
    """Area of the intersection of two disks (vectorised)."""
    r1, r2, d = np.broadcast_arrays(np.asarray(r1, float), np.asarray(r2, float), np.asarray(dist, float))
    out = np.zeros(r1.shape)
    small = np.minimum(r1, r2)
    inside = d <= np.abs(r1 - r2)
    out[inside] = math.pi * small[inside] ** 2
    part = ~inside & (d < r1 + r2)
    a, b, c = r1[part], r2[part], d[part]
    ca = np.clip((c**2 + a**2 - b**2) / (2 * c * a), -1, 1)
    cb = np.clip((c**2 + b**2 - a**2) / (2 * c * b), -1, 1)
    tri = 0.5 * np.sqrt(np.maximum((-c + a + b) * (c + a - b) * (c - a + b) * (c + a + b), 0.0))
    out[part] = a**2 * np.arccos(ca) + b**2 * np.arccos(cb) - tri
    return out


def max_overlap(centers: np.ndarray, radii: np.ndarray) -> int:
    """Largest number of closed balls sharing a point.

    The maximum depth of a disk arrangement is attained at a disk centre or
    at an intersection point of two circles, so only those are probed.
    """
    if len(radii) == 0:
        return 0
    cand = [centers]
    tree = cKDTree(centers)
    pairs = tree.query_pairs(2 * float(radii.max()), output_type="ndarray")
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        a, b = radii[i], radii[j]
        v = centers[j] - centers[i]
        d = np.hypot(v[:, 0], v[:, 1])
        ok = (d > 0) & (d <= a + b) & (d >= np.abs(a - b))
        i, j, a, b, v, d = i[ok], j[ok], a[ok], b[ok], v[ok], d[ok]
        along = (d**2 + a**2 - b**2) / (2 * d)
        perp = np.sqrt(np.maximum(a**2 - along**2, 0.0))
        u = v / d[:, None]
        base = centers[i] + along[:, None] * u
        nrm = np.column_stack([-u[:, 1], u[:, 0]])
        cand += [base + perp[:, None] * nrm, base - perp[:, None] * nrm]
    pts = np.concatenate(cand)
    ptree = cKDTree(pts)
    counts = np.zeros(len(pts), dtype=np.int64)
    near = ptree.query_ball_point(centers, radii * (1 + 1e-9) + 1e-15)
    for lst in near:
        counts[lst] += 1
    return int(counts.max())


@dataclass(frozen=True)
class ChainReport:
    k: int
    c1_overlap: float
    c2_approach: float
    c3_clearance: float
    c4_overlap_count: int
    c5_center: float
    terminal_identity: bool
    c6_count: float | None
    dyadic_counts: list
    spacing_ok: bool
    valid: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_chain(chain: BallChain, s: float | None = None, M: float | None = None) -> ChainReport:
    """Smallest constants for which each chain property holds.

    Property 3 is a hard constraint: ``valid`` is false when the clearance
    constant falls below ``M``.
    """
    s = chain.s if s is None else s
    M = chain.M if M is None else M
    c, r, x = chain.centers, chain.radii, chain.x
    dom = chain.domain
    if chain.k > 0:
        gap = np.hypot(*(c[1:] - c[:-1]).T)
        inter = lens_area(r[:-1], r[1:], gap)
        union = math.pi * (r[:-1] ** 2 + r[1:] ** 2) - inter
        with np.errstate(divide="ignore"):
            c1 = float(np.max(np.where(inter > 0, union / inter, np.inf)))
        spacing_ok = bool(np.all(gap <= np.minimum(r[:-1], r[1:]) / 2 * (1 + 1e-12)))
    else:
        c1 = 1.0
        spacing_ok = True
    to_x = np.hypot(*(c - x).T)
    c2 = float(np.max(np.maximum(to_x - r, 0.0) / r ** (1.0 / s)))
    clearance = dom.dist(c) - r
    c3 = float(np.min(clearance / r))
    c4 = max_overlap(c, r)
    c5 = float(np.max(to_x / r ** (1.0 / s)))
    terminal = bool(np.array_equal(c[-1], x) and r[-1] == float(dom.dist(x)[0]) / (4 * M))
    counts = []
    c6 = None
    if s > 1:
        kmin = int(math.floor(-math.log2(r.max()))) - 1
        kmax = int(math.ceil(-math.log2(r.min()))) + 1
        vals = []
        for kk in range(kmin, kmax + 1):
            rr = 2.0**-kk
            cnt = int(np.count_nonzero(r > rr))
            counts.append((rr, cnt))
            vals.append(cnt / rr ** ((1.0 - s) / s))
        c6 = float(max(vals))
    valid = bool(c3 >= M and np.isfinite(c1))
    return ChainReport(
        int(chain.k), c1, c2, c3, int(c4), c5, terminal, c6, counts, spacing_ok, valid
    )
