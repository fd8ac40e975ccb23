"""Whitney decomposition by top-down dyadic subdivision.

Cubes of generation ``j`` have diameter exactly ``2**-j`` (side
``2**-j / sqrt(2)``) and are anchored at the lower-left corner of the
domain's bounding box.  A cube is accepted as soon as
``diam(Q) <= dist(Q, boundary)``; maximality of accepted cubes then gives the
upper bound ``dist <= 4 diam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import ConstructionError
from .geometry import Domain, monte_carlo_area
from .io import write_csv

SQRT2 = math.sqrt(2.0)

# Every point with d(x) > COVER_CONSTANT * 2**-j_max lies in an accepted cube:
# the generation-j_max cube containing it has dist >= d(x) - diam >= diam.
COVER_CONSTANT = 2.0


def side_of(j) -> np.ndarray:
    return np.exp2(-np.asarray(j, dtype=float)) / SQRT2


@dataclass(frozen=True)
class WhitneyCube:
    j: int
    ix: int
    iy: int
    lo: tuple[float, float]
    side: float
    dist: float

    @property
    def diam(self) -> float:
        return 2.0 ** (-self.j)

    @property
    def center(self) -> tuple[float, float]:
        return (self.lo[0] + self.side / 2, self.lo[1] + self.side / 2)


@dataclass(eq=False)
class WhitneyDecomposition:
    domain: Domain
    j_max: int
    j0: int
    gen: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    lo: np.ndarray
    side: np.ndarray
    dist: np.ndarray
    q0: int
    _adjacency: sparse.csr_matrix | None = field(default=None, repr=False)
    _locator: dict | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.gen)

    @property
    def diam(self) -> np.ndarray:
        return self.side * SQRT2

    @property
    def center(self) -> np.ndarray:
        return self.lo + self.side[:, None] / 2

    @property
    def area(self) -> np.ndarray:
        return self.side**2

    def cube(self, k: int) -> WhitneyCube:
        return WhitneyCube(
            int(self.gen[k]),
            int(self.ix[k]),
            int(self.iy[k]),
            (float(self.lo[k, 0]), float(self.lo[k, 1])),
            float(self.side[k]),
            float(self.dist[k]),
        )

    def cubes(self) -> list[WhitneyCube]:
        return [self.cube(k) for k in range(len(self))]

    def generation(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.gen == j)

    @property
    def adjacency(self) -> sparse.csr_matrix:
        """Cubes whose closures meet (shared edge or corner)."""
        if self._adjacency is None:
            i, k = _touching_pairs(self.lo, self.side, self.gen, strict=False)
            n = len(self)
            a = sparse.coo_matrix((np.ones(len(i), dtype=np.int8), (i, k)), shape=(n, n))
            self._adjacency = (a + a.T).tocsr()
        return self._adjacency

    def locate(self, pts) -> np.ndarray:
        """Index of a cube containing each point, -1 where none does."""
        pts = np.asarray(pts, float).reshape(-1, 2)
        if self._locator is None:
            loc = {}
            for j in np.unique(self.gen):
                idx = self.generation(j)
                keys = self.ix[idx].astype(np.int64) * (1 << 31) + self.iy[idx]
                order = np.argsort(keys)
                loc[int(j)] = (keys[order], idx[order])
            self._locator = loc
        origin = np.asarray(self.domain.bbox[0], float)
        out = np.full(len(pts), -1, dtype=np.int64)
        for j, (keys, idx) in self._locator.items():
            s = float(side_of(j))
            g = np.floor((pts - origin) / s).astype(np.int64)
            k = g[:, 0] * (1 << 31) + g[:, 1]
            pos = np.searchsorted(keys, k)
            pos = np.minimum(pos, len(keys) - 1)
            hit = (keys[pos] == k) & (out < 0)
            out[hit] = idx[pos[hit]]
        return out

    def csv_rows(self):
        for k in range(len(self)):
            yield (int(self.gen[k]), int(self.ix[k]), int(self.iy[k]), float(self.diam[k]), float(self.dist[k]))

    def to_csv(self, path):
        return write_csv(path, ["j", "ix", "iy", "diam", "dist"], self.csv_rows())


def decompose(domain: Domain, j_max: int) -> WhitneyDecomposition:
    """Whitney cubes of ``domain`` down to generation ``j_max``.

    Cubes still straddling the boundary at ``j_max`` are discarded.  Raises
    :class:`ConstructionError` if no accepted cube contains ``domain.x0``.
    """
    (bx0, by0), (bx1, by1) = domain.bbox
    origin = np.array([bx0, by0], float)
    extent = max(bx1 - bx0, by1 - by0)
    j0 = int(math.floor(-math.log2(SQRT2 * extent)))
    if j_max < j0:
        raise ConstructionError("j_max is coarser than the bounding box", j_max=j_max, j0=j0)
    out_gen, out_ix, out_iy, out_dist = [], [], [], []
    cand = np.zeros((1, 2), dtype=np.int64)
    for j in range(j0, j_max + 1):
        if len(cand) == 0:
            break
        s = float(side_of(j))
        lo = origin + cand * s
        d = domain.square_distance(lo, np.full(len(cand), s))
        centre_in = domain.closed_member(lo + s / 2)
        diam = 2.0**-j
        accept = centre_in & (d >= diam)
        out_gen.append(np.full(int(accept.sum()), j))
        out_ix.append(cand[accept, 0])
        out_iy.append(cand[accept, 1])
        out_dist.append(d[accept])
        # squares that miss the boundary with the centre outside are exterior
        refine = ~accept & ~((d > 0) & ~centre_in)
        parents = cand[refine]
        cand = (
            (2 * parents[:, None, :] + np.array([[0, 0], [1, 0], [0, 1], [1, 1]])[None])
            .reshape(-1, 2)
        )
    gen = np.concatenate(out_gen).astype(np.int64)
    ix = np.concatenate(out_ix).astype(np.int64)
    iy = np.concatenate(out_iy).astype(np.int64)
    dist = np.concatenate(out_dist)
    order = np.lexsort((ix, iy, gen))
    gen, ix, iy, dist = gen[order], ix[order], iy[order], dist[order]
    side = side_of(gen)
    lo = origin + np.column_stack([ix, iy]) * side[:, None]
    dec = WhitneyDecomposition(domain, j_max, j0, gen, ix, iy, lo, side, dist, -1)
    hit = dec.locate(np.array(domain.x0))[0]
    if hit < 0:
        raise ConstructionError(
            "no Whitney cube contains x0; increase j_max", j_max=j_max, x0=list(domain.x0)
        )
    dec.q0 = int(hit)
    return dec


def _touching_pairs(lo, side, gen, strict: bool):
    """Index pairs (i < k) of squares that overlap (``strict``: interiors
    meet) or touch (closures meet)."""
    n = len(lo)
    if n == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    centre = lo + side[:, None] / 2
    tol = 1e-9 * side.min()
    pi, pk = [], []
    levels = np.unique(side)
    trees = {}
    for s in levels:
        idx = np.flatnonzero(side == s)
        trees[s] = (cKDTree(centre[idx]), idx)
    for a_pos, s_small in enumerate(levels):
        tree_s, idx_s = trees[s_small]
        for s_big in levels[a_pos:]:
            tree_b, idx_b = trees[s_big]
            r = (s_small + s_big) * SQRT2 / 2 + tol
            m = tree_b.sparse_distance_matrix(tree_s, r, output_type="ndarray")
            a = idx_b[m["i"]]
            b = idx_s[m["j"]]
            if s_big == s_small:
                keep = a < b
                a, b = a[keep], b[keep]
            pi.append(a)
            pk.append(b)
    if not pi:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    i = np.concatenate(pi)
    k = np.concatenate(pk)
    hi = lo + side[:, None]
    ov = np.minimum(hi[i], hi[k]) - np.maximum(lo[i], lo[k])
    if strict:
        keep = np.all(ov > tol, axis=1)
    else:
        keep = np.all(ov >= -tol, axis=1)
    i, k = i[keep], k[keep]
    lo_i = np.minimum(i, k)
    hi_k = np.maximum(i, k)
    del gen
    return lo_i, hi_k


def verify(dec: WhitneyDecomposition, measure: float | None = None, mc_samples: int = 10**6) -> dict:
    """Audit a decomposition with the exact distance oracle.

    Violations are counted, never raised.  The coverage deficit is relative to
    ``measure`` (default: the domain's measure hint, else Monte-Carlo).
    """
    dom = dec.domain
    d = dom.square_distance(dec.lo, dec.side)
    diam = dec.diam
    ratio = d / diam
    bad_lower = d < diam
    bad_upper = d > 4.0 * diam
    inside = dom.closed_member(dec.center) & (d > 0)
    violations = bad_lower | bad_upper | ~inside
    oi, ok = _touching_pairs(dec.lo, dec.side, dec.gen, strict=True)
    if measure is None:
        measure = dom.measure if dom.measure is not None else monte_carlo_area(dom, mc_samples)
    covered = float(np.sum(dec.area))
    gaps = []
    if len(dec) > 1:
        adj = dec.adjacency.tocoo()
        gaps = np.abs(dec.gen[adj.row] - dec.gen[adj.col])
    return {
        "cubes": int(len(dec)),
        "j_min": int(dec.gen.min()),
        "j_max": int(dec.j_max),
        "violations": int(violations.sum()),
        "violating_cubes": np.flatnonzero(violations).tolist(),
        "ratio_min": float(ratio.min()),
        "ratio_max": float(ratio.max()),
        "overlaps": int(len(oi)),
        "disjoint": bool(len(oi) == 0),
        "measure": float(measure),
        "covered": covered,
        "coverage_deficit": float((measure - covered) / measure),
        "cover_constant": COVER_CONSTANT,
        "max_adjacent_generation_gap": int(np.max(gaps)) if len(gaps) else 0,
        "q0": int(dec.q0),
    }


def replace_cube(dec: WhitneyDecomposition, k: int, lo, side: float) -> WhitneyDecomposition:
    """Copy of ``dec`` with cube ``k`` replaced by an arbitrary square
    (used to build negative cases for :func:`verify`)."""
    new_lo = dec.lo.copy()
    new_side = dec.side.copy()
    new_lo[k] = lo
    new_side[k] = side
    return WhitneyDecomposition(
        dec.domain, dec.j_max, dec.j0, dec.gen.copy(), dec.ix.copy(), dec.iy.copy(),
        new_lo, new_side, dec.dist.copy(), dec.q0,
    )
