"""Quasihyperbolic distance on a weighted lattice graph, QHBC exponent
estimation, and shadows/pasts of Whitney cubes.

Edges join 8-neighbours; the weight of an edge ``[a, b]`` is
``|a - b| * (1/d(a) + 1/d(b)) / 2``.  Exact query points are attached to the
lattice nodes inside their own boundary-distance ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .core import ExponentParams
from .errors import DisconnectedError, DomainError, InsufficientDataError, ResolutionError
from .geometry import Domain, NodeSet, sample_interior
from .io import write_csv
from .whitney import WhitneyDecomposition

OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))


@dataclass(eq=False)
class QhGraph:
    nodes: NodeSet
    matrix: sparse.csr_matrix
    _tree: cKDTree | None = field(default=None, repr=False)

    @property
    def domain(self) -> Domain:
        return self.nodes.domain

    @property
    def h(self) -> float:
        return self.nodes.h

    def __len__(self):
        return len(self.nodes)

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.nodes.points)
        return self._tree

    def with_points(self, pts) -> tuple[sparse.csr_matrix, np.ndarray]:
        """Graph matrix extended by virtual nodes at ``pts`` (appended in order).

        Each point is joined to the lattice nodes within
        ``min(d(p), sqrt(2) h)``; such segments stay inside ``B(p, d(p))``.
        """
        pts = np.asarray(pts, float).reshape(-1, 2)
        N = len(self)
        dp = self.domain.dist(pts)
        if np.any(dp <= 0):
            raise DomainError("query points must be interior", points=pts[dp <= 0].tolist())
        rows, cols, vals = [], [], []
        for m, (p, d) in enumerate(zip(pts, dp)):
            radius = min(d, math.sqrt(2.0) * self.h) * (1 - 1e-12)
            near = np.asarray(self.tree.query_ball_point(p, radius), dtype=np.int64)
            if len(near) == 0:
                raise ResolutionError(
                    "query point has no lattice node within its boundary distance; "
                    "use a finer h_grid",
                    point=p.tolist(),
                    h_grid=self.h,
                )
            near.sort()
            length = np.hypot(*(self.nodes.points[near] - p).T)
            w = length * 0.5 * (1.0 / d + 1.0 / self.nodes.d[near])
            # keep coincident nodes connected with a tiny positive weight
            w = np.maximum(w, np.finfo(float).tiny)
            rows += [np.full(len(near), N + m), near]
            cols += [near, np.full(len(near), N + m)]
            vals += [w, w]
        total = N + len(pts)
        extra = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(total, total),
        )
        base = self.matrix.tocoo()
        base = sparse.coo_matrix((base.data, (base.row, base.col)), shape=(total, total))
        return (base + extra).tocsr(), dp

    def coords(self, pts) -> np.ndarray:
        return np.concatenate([self.nodes.points, np.asarray(pts, float).reshape(-1, 2)])


def build_graph(domain: Domain, h_grid: float, window=None) -> QhGraph:
    """Lattice graph on ``sample_interior(domain, h_grid, window)``.

    A window only removes paths, so windowed distances never undercut the
    full-domain ones.
    """
    nodes = sample_interior(domain, h_grid, window)
    grid, (i0, j0) = nodes.lattice()
    ny, nx = grid.shape
    rows, cols, vals = [], [], []
    for di, dj in OFFSETS:
        ys = slice(max(0, -dj), ny - max(0, dj))
        xs = slice(0, nx - di)
        ys2 = slice(max(0, dj), ny - max(0, -dj))
        xs2 = slice(di, nx)
        a = grid[ys, xs].ravel()
        b = grid[ys2, xs2].ravel()
        ok = (a >= 0) & (b >= 0)
        a, b = a[ok], b[ok]
        length = h_grid * math.hypot(di, dj)
        # an edge can leave the domain only if both ends are close to it
        risky = np.minimum(nodes.d[a], nodes.d[b]) < length
        if np.any(risky):
            mid = 0.5 * (nodes.points[a[risky]] + nodes.points[b[risky]])
            inside = domain.contains(mid)
            keep = np.ones(len(a), dtype=bool)
            keep[np.flatnonzero(risky)[~inside]] = False
            a, b = a[keep], b[keep]
        w = length * 0.5 * (1.0 / nodes.d[a] + 1.0 / nodes.d[b])
        rows += [a, b]
        cols += [b, a]
        vals += [w, w]
    N = len(nodes)
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    ).tocsr()
    return QhGraph(nodes, mat)


def _graph(domain, h_grid, window, graph):
    if graph is not None:
        return graph
    return build_graph(domain, h_grid, window)


def qh_distance(domain: Domain, x, y, h_grid: float, window=None, graph: QhGraph | None = None) -> float:
    """Shortest-path approximation of ``k(x, y)``."""
    return qh_geodesic(domain, x, y, h_grid, window, graph).length


@dataclass(frozen=True)
class Geodesic:
    points: np.ndarray
    weights: np.ndarray
    length: float

    def __len__(self):
        return len(self.points)


def qh_geodesic(domain: Domain, x, y, h_grid: float, window=None, graph: QhGraph | None = None) -> Geodesic:
    """Discrete geodesic from ``x`` to ``y``; its edge weights sum to the
    returned length exactly (same summation order as the path)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.array_equal(x, y):
        return Geodesic(x.reshape(1, 2), np.zeros(0), 0.0)
    g = _graph(domain, h_grid, window, graph)
    mat, _ = g.with_points([x, y])
    N = len(g)
    dist, pred = dijkstra(mat, indices=N, return_predecessors=True)
    if not np.isfinite(dist[N + 1]):
        raise DisconnectedError(
            "points are disconnected at this resolution; try a finer h_grid", h_grid=h_grid
        )
    path = [N + 1]
    while path[-1] != N:
        path.append(int(pred[path[-1]]))
    path = path[::-1]
    coords = g.coords([x, y])[path]
    w = np.array([mat[a, b] for a, b in zip(path[:-1], path[1:])])
    length = 0.0
    for v in w:
        length += float(v)
    return Geodesic(coords, w, length)


# ------------------------------------------------------------------ QHBC fit


@dataclass(frozen=True)
class BetaFit:
    beta_hat: float
    c0_hat: float
    slope: float
    samples: int
    bins: int
    envelope_x: np.ndarray
    envelope_y: np.ndarray


def distances_from_base(graph: QhGraph) -> np.ndarray:
    """``k(x0, node)`` for every lattice node."""
    x0 = np.asarray(graph.domain.x0, float)
    mat, _ = graph.with_points([x0])
    N = len(graph)
    return dijkstra(mat, indices=N)[:N]


def estimate_qhbc_beta(
    domain: Domain,
    h_grid: float,
    sample_count: int,
    seed: int = 0,
    bins: int = 12,
    window=None,
    graph: QhGraph | None = None,
    sample_points=None,
) -> BetaFit:
    """Fit ``k(x, x0) <= (1/beta) log(d(x0)/d(x)) + C0`` from above.

    The scatter ``(log(d0/d), k)`` is split into equal-width bins of the
    abscissa; the per-bin maxima form the upper envelope, whose least-squares
    slope is ``1/beta``.  ``C0`` is the smallest intercept keeping every
    sample under the fitted line.
    """
    g = _graph(domain, h_grid, window, graph)
    d0 = float(domain.dist(np.array(domain.x0))[0])
    if sample_points is not None:
        pts = np.asarray(sample_points, float).reshape(-1, 2)
        mat, dp = g.with_points(np.concatenate([np.array([domain.x0]), pts]))
        N = len(g)
        k = dijkstra(mat, indices=N)[N + 1 :]
        d = dp[1:]
    else:
        kall = distances_from_base(g)
        rng = np.random.default_rng(seed)
        n = len(g)
        idx = np.sort(rng.choice(n, size=min(sample_count, n), replace=False))
        k = kall[idx]
        d = g.nodes.d[idx]
    X = np.log(d0 / d)
    ok = (X > 0) & np.isfinite(k)
    X, Y = X[ok], k[ok]
    if len(X) < 10:
        raise InsufficientDataError("fewer than 10 usable samples", usable=int(len(X)))
    edges = np.linspace(X.min(), X.max(), bins + 1)
    which = np.clip(np.searchsorted(edges, X, side="right") - 1, 0, bins - 1)
    ex, ey = [], []
    for b in range(bins):
        sel = np.flatnonzero(which == b)
        if len(sel):
            top = sel[np.argmax(Y[sel])]
            ex.append(X[top])
            ey.append(Y[top])
    ex, ey = np.array(ex), np.array(ey)
    if len(ex) < 2:
        raise InsufficientDataError("sample spread too small for an envelope fit", bins=len(ex))
    slope = float(np.polyfit(ex, ey, 1)[0])
    if not slope > 0:
        raise InsufficientDataError("non-increasing envelope; beta undefined", slope=slope)
    c0 = float(np.max(Y - slope * X))
    return BetaFit(1.0 / slope, c0, slope, int(len(X)), int(len(ex)), ex, ey)


# ------------------------------------------------------------ shadows / pasts


@dataclass(frozen=True)
class ShadowRecord:
    cube: int
    past: np.ndarray
    shadow: np.ndarray
    diam_shadow: float


@dataclass(eq=False)
class Shadows:
    """Pasts and shadows of every resolved cube of a decomposition.

    ``past[q1, q] == 1`` iff the discrete geodesic from ``x0`` to the centre of
    ``q1`` meets cube ``q``; shadows are the transpose.
    """

    dec: WhitneyDecomposition
    resolved: np.ndarray
    past: sparse.csr_matrix
    diam_shadow: np.ndarray

    @property
    def shadow(self) -> sparse.csr_matrix:
        return self.past.T.tocsr()

    def record(self, k: int) -> ShadowRecord:
        p = self.past
        s = self.shadow
        return ShadowRecord(
            int(k),
            p.indices[p.indptr[k] : p.indptr[k + 1]].copy(),
            s.indices[s.indptr[k] : s.indptr[k + 1]].copy(),
            float(self.diam_shadow[k]),
        )

    def past_sizes(self) -> np.ndarray:
        return np.diff(self.past.indptr)

    def shadow_sizes(self) -> np.ndarray:
        return np.diff(self.shadow.indptr)

    def csv_rows(self):
        ps, ss = self.past_sizes(), self.shadow_sizes()
        for k in np.flatnonzero(self.resolved):
            yield (float(self.dec.diam[k]), int(ps[k]), float(self.diam_shadow[k]), int(ss[k]))

    def to_csv(self, path):
        return write_csv(path, ["diam_q", "past_size", "diam_shadow", "shadow_size"], self.csv_rows())


def _segment_cubes(dec, a, b, samples):
    t = np.linspace(0.0, 1.0, samples)[None, :, None]
    pts = a[:, None, :] * (1 - t) + b[:, None, :] * t
    hit = dec.locate(pts.reshape(-1, 2)).reshape(len(a), samples)
    return hit


def shadows(dec: WhitneyDecomposition, domain: Domain, h_grid: float, graph: QhGraph | None = None) -> Shadows:
    """Pasts from one shortest-path tree rooted at ``x0``.

    Cubes with diameter below ``2 h_grid`` are not resolved by the lattice;
    they are flagged and excluded from pasts and shadows.
    """
    g = _graph(domain, h_grid, None, graph)
    N = len(g)
    x0 = np.asarray(domain.x0, float)
    mat, _ = g.with_points([x0])
    dist, pred = dijkstra(mat, indices=N, return_predecessors=True)
    coords = g.coords([x0])
    nc = len(dec)
    resolved = dec.diam >= 2 * h_grid
    centres = dec.center
    _, near = g.tree.query(centres)
    near = np.asarray(near, dtype=np.int64)
    resolved &= np.isfinite(dist[near])
    # cubes met by the segment from each node's predecessor to the node
    samples = 9
    parent = np.where(pred[: N + 1] < 0, N, pred[: N + 1])
    seg_hits = _segment_cubes(dec, coords[parent], coords[: N + 1], samples)
    seg_hits[N] = dec.q0
    cubes = np.flatnonzero(resolved)
    last = np.full(nc, -1, dtype=np.int64)
    rows, cols = [cubes, cubes], [cubes.copy(), np.full(len(cubes), dec.q0)]
    # final leg from the snapped node to the exact centre
    tail = _segment_cubes(dec, coords[near[cubes]], centres[cubes], samples)
    for c in range(samples):
        h = tail[:, c]
        ok = h >= 0
        rows.append(cubes[ok])
        cols.append(h[ok])
    cur = near[cubes].copy()
    owner = cubes.copy()
    while len(cur):
        hits = seg_hits[cur]
        for c in range(samples - 1, -1, -1):
            h = hits[:, c]
            new = (h >= 0) & (h != last[owner])
            rows.append(owner[new])
            cols.append(h[new])
            last[owner[new]] = h[new]
        done = cur == N
        nxt = parent[cur]
        cur = nxt[~done]
        owner = owner[~done]
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    past = sparse.coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(nc, nc)).tocsr()
    past.sum_duplicates()
    past.data[:] = 1
    diam_s = _shadow_diameters(dec, past.T.tocsr())
    return Shadows(dec, resolved, past, diam_s)


def _set_diameter(lo, side) -> float:
    corners = np.concatenate(
        [lo, lo + side[:, None] * (1, 0), lo + side[:, None] * (0, 1), lo + side[:, None]]
    )
    if len(lo) > 3:
        try:
            corners = corners[ConvexHull(corners).vertices]
        except QhullError:
            pass
    diff = corners[:, None, :] - corners[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))


def _shadow_diameters(dec, shadow: sparse.csr_matrix) -> np.ndarray:
    out = np.zeros(len(dec))
    for k in range(len(dec)):
        members = shadow.indices[shadow.indptr[k] : shadow.indptr[k + 1]]
        if len(members):
            out[k] = _set_diameter(dec.lo[members], dec.side[members])
    return out


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual_rms: float
    cubes: int
    generations: int


def shadow_scaling_fit(records: Shadows, dec: WhitneyDecomposition, region=None) -> ScalingFit:
    """Least-squares slope of ``log diam S(Q)`` against ``log diam Q``.

    ``region`` is a boolean mask or a predicate on cube centres (for mushroom
    domains: the stems); by default all resolved cubes are used.
    """
    mask = records.resolved & (records.diam_shadow > 0)
    if region is not None:
        sel = region(dec.center) if callable(region) else np.asarray(region, bool)
        mask &= sel
    idx = np.flatnonzero(mask)
    gens = np.unique(dec.gen[idx])
    if len(idx) < 10 or len(gens) < 3:
        raise InsufficientDataError(
            "need at least 10 cubes spanning 3 generations", cubes=int(len(idx)), generations=int(len(gens))
        )
    x = np.log(dec.diam[idx])
    y = np.log(records.diam_shadow[idx])
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return ScalingFit(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))), int(len(idx)), int(len(gens)))


def stem_region(domain: Domain):
    """Predicate selecting points inside any mushroom stem."""

    def pred(pts):
        out = np.zeros(len(pts), dtype=bool)
        for m in domain.mushrooms:
            out |= m.in_stem(pts)
        return out

    return pred


def shadow_sum_check(dec: WhitneyDecomposition, records: Shadows, E, params: ExponentParams) -> float:
    """Ratio of the two sides of the shadow-sum bound

    ``sum_Q |S(Q) & E|^{p/(p-1)} |Q|^{-(n-p delta)/(n(p-1))}``
    against ``|E|^{(p/(p-1))((q-1)/q)}`` for a union ``E`` of cubes.
    """
    p, q, n, delta = params.p, params.q, params.n, params.delta
    if not p > 1:
        raise DomainError("shadow-sum bound requires p > 1", constraint="p > 1", p=p)
    E = np.unique(np.asarray(E, dtype=np.int64))
    if len(E) == 0:
        return 0.0
    ind = np.zeros(len(dec))
    ind[E] = dec.area[E]
    inter = records.shadow @ ind
    live = records.resolved & (inter > 0)
    pp = p / (p - 1.0)
    lhs = np.sum(inter[live] ** pp * dec.area[live] ** (-(n - p * delta) / (n * (p - 1.0))))
    rhs = float(np.sum(dec.area[E])) ** (pp * (q - 1.0) / q)
    return float(lhs / rhs)


def past_power_sums(records: Shadows, dec: WhitneyDecomposition, eps: float) -> np.ndarray:
    """``sum_{Q in P(Q1)} |Q|^eps`` for every cube ``Q1`` (0 if unresolved)."""
    return np.where(records.resolved, records.past @ (dec.area**eps), 0.0)
