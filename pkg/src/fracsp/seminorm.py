"""Localized fractional energy, L^q deviations, truncations and Riesz
potentials of functions sampled on lattice nodes.

The energy density at a node ``x`` is

    g_u(x) = sum_{y : 0 < |x-y| < tau d(x)} |u(x)-u(y)|^p / |x-y|^(n+p delta) * h^n

plus an analytic correction for the node's own cell, where ``u`` is replaced
by its finite-difference linearisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gamma

from .core import ExponentParams
from .errors import DomainError, InsufficientDataError
from .geometry import Domain, NodeSet
from .io import write_csv

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True, eq=False)
class GridFunction:
    nodes: NodeSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.nodes),):
            raise ValueError("one value per node is required")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, nodes: NodeSet, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(nodes, np.asarray(f(nodes.points), dtype=float))

    @property
    def domain(self) -> Domain:
        return self.nodes.domain

    @property
    def h(self) -> float:
        return self.nodes.h

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.nodes, values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def csv_rows(self):
        for (x, y), v in zip(self.nodes.points, self.values):
            yield (float(x), float(y), float(v))

    def to_csv(self, path):
        return write_csv(path, ["x", "y", "value"], self.csv_rows())


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    g: np.ndarray
    correction: np.ndarray
    h: float

    @property
    def correction_share(self) -> float:
        s = float(np.sum(self.g))
        return float(np.sum(self.correction) / s) if s > 0 else 0.0


# ------------------------------------------------------------ cell integrals


def angular_moment(p: float) -> float:
    """``int_0^{2 pi} |cos t|^p dt``."""
    return 2.0 * math.sqrt(math.pi) * gamma((p + 1) / 2) / gamma(p / 2 + 1)


def cell_radial_integral(h: float, rho, a: float) -> np.ndarray:
    """``int_0^{2 pi} min(R(t), rho)^a dt / a`` where ``R`` is the radial
    function of the square ``[-h/2, h/2]^2`` (``a > 0``)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    half = h / 2.0
    out = np.empty_like(rho)
    small = rho <= half
    out[small] = 2 * math.pi * rho[small] ** a / a
    big = ~small
    if np.any(big):
        r = np.minimum(rho[big], half * math.sqrt(2.0))
        t_star = np.arccos(np.clip(half / r, -1.0, 1.0))
        # int_0^{t*} (half / cos t)^a dt by Gauss-Legendre
        t = 0.5 * t_star[:, None] * (_GL_X[None, :] + 1.0)
        inner = 0.5 * t_star * np.sum(_GL_W[None, :] * (half / np.cos(t)) ** a, axis=1)
        out[big] = 8.0 * (inner + (math.pi / 4 - t_star) * r**a) / a
    return out


# --------------------------------------------------------------- seminorm


def _offsets(max_radius_cells: float) -> tuple[np.ndarray, np.ndarray]:
    m = int(math.floor(max_radius_cells))
    r = np.arange(-m, m + 1)
    I, J = np.meshgrid(r, r, indexing="ij")
    o = np.column_stack([I.ravel(), J.ravel()])
    rad = np.hypot(o[:, 0], o[:, 1])
    keep = (rad > 0) & (rad < max_radius_cells)
    o, rad = o[keep], rad[keep]
    order = np.lexsort((o[:, 1], o[:, 0], rad))
    return o[order], rad[order]


def _gradient(u: GridFunction) -> np.ndarray:
    Dx, Dy = gradient_operators(u.nodes)
    return np.column_stack([Dx @ u.values, Dy @ u.values])


def _g_values(u: GridFunction, params: ExponentParams, which=None, correction: bool = True):
    nodes = u.nodes
    n, p, delta, tau = params.n, params.p, params.delta, params.tau
    h = nodes.h
    sel = np.arange(len(nodes)) if which is None else np.atleast_1d(np.asarray(which, dtype=np.int64))
    grid, (i0, j0) = nodes.lattice()
    ny, nx = grid.shape
    radius = tau * nodes.d[sel]
    order = np.argsort(-radius, kind="stable")
    sel_sorted = sel[order]
    rad_sorted = radius[order] / h
    I = nodes.ij[sel_sorted, 0] - i0
    J = nodes.ij[sel_sorted, 1] - j0
    v = u.values
    vx = v[sel_sorted]
    acc = np.zeros(len(sel))
    if len(sel):
        offs, orad = _offsets(float(rad_sorted[0]))
        # number of selected nodes whose ball reaches each offset (prefix of sorted order)
        reach = np.searchsorted(-rad_sorted, -orad, side="left")
        cell = h**n
        for (di, dj), rr, m in zip(offs, orad, reach):
            if m == 0:
                continue
            ii = I[:m] + di
            jj = J[:m] + dj
            ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
            nb = np.full(m, -1)
            nb[ok] = grid[jj[ok], ii[ok]]
            hit = nb >= 0
            w = cell / (rr * h) ** (n + p * delta)
            contrib = np.zeros(m)
            contrib[hit] = np.abs(vx[:m][hit] - v[nb[hit]]) ** p * w
            acc[:m] += contrib
    corr = np.zeros(len(sel))
    if correction and len(sel):
        grad = _gradient(u)[sel_sorted]
        gnorm = np.hypot(grad[:, 0], grad[:, 1])
        a = p * (1.0 - delta)
        if n != 2:
            raise DomainError("near-diagonal correction implemented for n = 2", n=n)
        radial = cell_radial_integral(h, tau * nodes.d[sel_sorted], a)
        corr = gnorm**p * angular_moment(p) / (2 * math.pi) * radial
    out_g = np.empty(len(sel))
    out_c = np.empty(len(sel))
    out_g[order] = acc + corr
    out_c[order] = corr
    return out_g, out_c


def g_u_pointwise(u: GridFunction, x: int, params: ExponentParams) -> float:
    """``g_u`` at node index ``x``."""
    g, _ = _g_values(u, params, which=[x])
    return float(g[0])


def g_u_field(u: GridFunction, params: ExponentParams, correction: bool = True) -> np.ndarray:
    return _g_values(u, params, correction=correction)[0]


def fractional_energy(u: GridFunction, params: ExponentParams, mask=None, correction: bool = True) -> EnergyBreakdown:
    """``int g_u`` by the node-centred midpoint rule.

    ``mask`` restricts the outer integration to a node subset; the inner
    integral always runs over every node of ``u``.
    """
    which = None if mask is None else np.flatnonzero(np.asarray(mask, bool))
    g, c = _g_values(u, params, which=which, correction=correction)
    cell = u.h**params.n
    total = float(np.sum(g) * cell)
    return EnergyBreakdown(total, g, c, u.h)


def lq_deviation(u: GridFunction, q: float, background_measure: float = 0.0) -> float:
    """``int |u - mean(u)|^q``.

    ``background_measure`` accounts for a region outside the node set on
    which ``u`` vanishes; it enters both the mean and the integral.
    """
    if not q >= 1:
        raise DomainError("q must satisfy q >= 1", field="q", value=q)
    cell = u.h**u.domain.n
    mass = len(u.values) * cell + background_measure
    mean = float(np.sum(u.values) * cell / mass)
    dev = float(np.sum(np.abs(u.values - mean) ** q) * cell)
    return dev + background_measure * abs(mean) ** q


# ---------------------------------------------------------- test functions


def mushroom_test_values(domain: Domain, i: int, pts: np.ndarray) -> np.ndarray:
    """1 on the cap, linear along the stem axis, 0 elsewhere."""
    if not 0 <= i < len(domain.mushrooms):
        raise IndexError(f"mushroom index {i} out of range")
    g = domain.mushrooms[i]
    pts = np.asarray(pts, float).reshape(-1, 2)
    inside = g.contains(pts)
    lin = np.clip((pts[:, 1] - g.base) / g.height, 0.0, 1.0)
    return np.where(inside, lin, 0.0)


def mushroom_test_function(domain: Domain, i: int, nodes: NodeSet) -> GridFunction:
    return GridFunction(nodes, mushroom_test_values(domain, i, nodes.points))


# ---------------------------------------------------------------- truncation


def truncate_values(v: np.ndarray, j: int) -> np.ndarray:
    t = 2.0**j
    return np.minimum(t, np.maximum(0.0, v - t))


def truncate(v: GridFunction, j: int) -> GridFunction:
    """``v_j = min(2^j, max(0, v - 2^j))``."""
    return v.with_values(truncate_values(v.values, j))


def level_index(v: np.ndarray) -> np.ndarray:
    """``k`` with ``2^k <= v < 2^(k+1)`` (the set ``A_k``); undefined (huge
    negative) where ``v <= 0``."""
    out = np.full(v.shape, np.iinfo(np.int64).min, dtype=np.int64)
    pos = v > 0
    out[pos] = np.floor(np.log2(v[pos])).astype(np.int64)
    # guard the rounding of log2 at exact powers of two
    k = out[pos]
    k -= (2.0**k > v[pos]).astype(np.int64)
    k += (2.0 ** (k + 1) <= v[pos]).astype(np.int64)
    out[pos] = k
    return out


@dataclass(frozen=True)
class TruncationReport:
    trials: int
    contraction_violations: int
    level_bound_violations: int
    separation_violations: int
    level_bound_checked: int
    partition_ok: bool

    @property
    def violations(self) -> int:
        return self.contraction_violations + self.level_bound_violations + self.separation_violations


def truncation_bounds_check(v: GridFunction, trials: int, seed: int = 0) -> TruncationReport:
    """Randomised audit of the truncation inequalities.

    Each trial draws a random node pair and level ``k`` and checks
    ``|v_k(y) - v_k(z)| <= |v(y) - v(z)|``; it also draws a pair from
    ``A_i x A_j`` with ``i <= k <= j`` and checks
    ``|v_k(y) - v_k(z)| <= 4 * 2^(k+1-j) |v(y) - v(z)|`` together with the
    separation ``|v(y) - v(z)| >= 2^(j-2)`` when ``j - 1 > i``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1", field="trials", value=trials)
    rng = np.random.default_rng(seed)
    vals = v.values
    lev = level_index(vals)
    pos = vals > 0
    levels = np.unique(lev[pos])
    if len(levels) == 0:
        raise InsufficientDataError("v has no positive values")
    lo_k, hi_k = int(levels.min()), int(levels.max())
    # level-set algebra: F_j = {v_j >= 2^j}, A_k = F_{k-1} \ F_k
    partition_ok = True
    covered = np.zeros(len(vals), dtype=np.int64)
    for k in range(lo_k, hi_k + 1):
        F_prev = truncate_values(vals, k - 1) >= 2.0 ** (k - 1)
        F_k = truncate_values(vals, k) >= 2.0**k
        A_k = F_prev & ~F_k
        partition_ok &= bool(np.array_equal(A_k, lev == k))
        covered += A_k
    partition_ok &= bool(np.array_equal(covered, pos.astype(np.int64)))
    tol = 1e-12
    contraction = 0
    bound = 0
    separation = 0
    checked = 0
    members = {int(k): np.flatnonzero(lev == k) for k in levels}
    n = len(vals)
    for _ in range(trials):
        y, z = rng.integers(0, n, size=2)
        k = int(rng.integers(lo_k - 1, hi_k + 2))
        t = 2.0**k
        dk = abs(min(t, max(0.0, vals[y] - t)) - min(t, max(0.0, vals[z] - t)))
        if dk > abs(vals[y] - vals[z]) * (1 + tol):
            contraction += 1
        i, j = np.sort(rng.choice(levels, size=2))
        i, j = int(i), int(j)
        y = members[i][rng.integers(len(members[i]))]
        z = members[j][rng.integers(len(members[j]))]
        k = int(rng.integers(i, j + 1))
        t = 2.0**k
        dk = abs(min(t, max(0.0, vals[y] - t)) - min(t, max(0.0, vals[z] - t)))
        diff = abs(vals[y] - vals[z])
        checked += 1
        if dk > 4.0 * 2.0 ** (k + 1 - j) * diff * (1 + tol):
            bound += 1
        if j - 1 > i and diff < 2.0 ** (j - 2) * (1 - tol):
            separation += 1
    return TruncationReport(trials, contraction, bound, separation, checked, partition_ok)


def random_piecewise_linear(nodes: NodeSet, seed: int, coarse: int = 6, levels: tuple[int, int] = (-6, 6)) -> GridFunction:
    """Bilinear interpolant of log-uniform random values on a coarse grid
    over the node bounding box; spans several dyadic levels."""
    rng = np.random.default_rng(seed)
    lo = nodes.points.min(axis=0)
    hi = nodes.points.max(axis=0)
    vals = 2.0 ** rng.uniform(levels[0], levels[1], size=(coarse + 1, coarse + 1))
    t = (nodes.points - lo) / np.where(hi > lo, hi - lo, 1.0) * coarse
    i = np.clip(np.floor(t[:, 0]).astype(int), 0, coarse - 1)
    j = np.clip(np.floor(t[:, 1]).astype(int), 0, coarse - 1)
    fx = t[:, 0] - i
    fy = t[:, 1] - j
    v = (
        vals[i, j] * (1 - fx) * (1 - fy)
        + vals[i + 1, j] * fx * (1 - fy)
        + vals[i, j + 1] * (1 - fx) * fy
        + vals[i + 1, j + 1] * fx * fy
    )
    return GridFunction(nodes, v)


# ----------------------------------------------------------- Riesz potential


def riesz_cell_integral(h: float, delta: float, n: int = 2) -> float:
    """``int_{[-h/2,h/2]^2} |w|^(delta-n) dw`` in polar coordinates."""
    if n != 2:
        raise DomainError("cell integral implemented for n = 2", n=n)
    return float(cell_radial_integral(h, h, delta)[0])


NEAR_CELLS = 3


def riesz_near_weights(h: float, delta: float, near: int = NEAR_CELLS) -> np.ndarray:
    """Exact kernel integrals over the cells with ``|offset|_inf <= near``.

    Entry ``[di + near, dj + near]`` is ``int_{cell(di, dj)} |w|^(delta-2) dw``;
    the kernel is smooth on every cell but the centre one, which is
    integrated in polar coordinates.
    """
    gx, gw = np.polynomial.legendre.leggauss(24)
    t = 0.5 * gx
    w2 = np.outer(gw, gw) * 0.25
    out = np.empty((2 * near + 1, 2 * near + 1))
    for a in range(-near, near + 1):
        for b in range(-near, near + 1):
            if a == 0 and b == 0:
                out[a + near, b + near] = riesz_cell_integral(1.0, delta)
                continue
            X = a + t[:, None]
            Y = b + t[None, :]
            out[a + near, b + near] = float(np.sum(w2 * np.hypot(X, Y) ** (delta - 2.0)))
    return out * h**delta


def riesz_apply(nodes: NodeSet, F: np.ndarray, delta: float, targets=None, chunk: int = 1024) -> np.ndarray:
    """``I_delta`` applied to the columns of ``F`` (one row per node),
    evaluated at ``targets`` (node indices; default all).

    Far cells use the midpoint rule; cells within ``NEAR_CELLS`` lattice steps
    of the target use exact kernel integrals.
    """
    n = nodes.domain.n
    if not 0 < delta < n:
        raise DomainError("requires 0 < delta < n", constraint="0 < delta < n", delta=delta)
    F = np.asarray(F, dtype=float)
    squeeze = F.ndim == 1
    F2 = F.reshape(len(nodes), -1)
    tgt = np.arange(len(nodes)) if targets is None else np.atleast_1d(np.asarray(targets, dtype=np.int64))
    cell = nodes.h**n
    table = riesz_near_weights(nodes.h, delta)
    m = NEAR_CELLS
    ij = nodes.ij
    # only nodes carrying mass contribute
    src = np.flatnonzero(np.any(F2 != 0, axis=1))
    F2 = F2[src]
    out = np.empty((len(tgt), F2.shape[1]))
    for s in range(0, len(tgt), chunk):
        t = tgt[s : s + chunk]
        dx = ij[t, None, 0] - ij[None, src, 0]
        dy = ij[t, None, 1] - ij[None, src, 1]
        r = np.hypot(dx, dy) * nodes.h
        with np.errstate(divide="ignore"):
            K = np.where(r > 0, r ** (delta - n), 0.0) * cell
        close = (np.abs(dx) <= m) & (np.abs(dy) <= m)
        K[close] = table[dx[close] + m, dy[close] + m]
        out[s : s + chunk] = K @ F2
    return out[:, 0] if squeeze else out


def riesz_potential(f: GridFunction, delta: float, targets=None) -> GridFunction | np.ndarray:
    """``I_delta f(x) = int f(y) |x-y|^(delta-n) dy``.

    Returns a grid function, or a plain array when ``targets`` selects nodes.
    """
    vals = riesz_apply(f.nodes, f.values, delta, targets)
    if targets is None:
        return f.with_values(vals)
    return vals


def weak_type_sup(values: np.ndarray, cell: float, l1: float, n: int, delta: float) -> float:
    """``sup_t |{|I| > t}| t^(n/(n-delta)) / ||f||_1^(n/(n-delta))``.

    The supremum over all ``t > 0`` is approached from below each sample
    value, where the superlevel set holds every sample at least as large.
    """
    a = n / (n - delta)
    v = np.sort(np.abs(values))[::-1]
    v = v[v > 0]
    if len(v) == 0:
        return 0.0
    counts = np.arange(1, len(v) + 1)
    return float(np.max(counts * cell * v**a) / l1**a)


def weak_type_ratio(f: GridFunction, delta: float, potential: np.ndarray | None = None) -> float:
    """Weak-type ratio of the Riesz potential of ``f``."""
    n = f.domain.n
    cell = f.h**n
    l1 = float(np.sum(np.abs(f.values)) * cell)
    if not l1 > 0:
        raise DomainError("f must be nonzero", constraint="||f||_1 > 0")
    pot = riesz_apply(f.nodes, f.values, delta) if potential is None else potential
    return weak_type_sup(pot, cell, l1, n, delta)


# ------------------------------------------------------- explicit operator


def gradient_operators(nodes: NodeSet):
    """Sparse finite-difference matrices ``(Dx, Dy)``: centred where both
    neighbours exist, one-sided where only one does, zero otherwise."""
    from scipy import sparse

    grid, (i0, j0) = nodes.lattice()
    ny, nx = grid.shape
    I = nodes.ij[:, 0] - i0
    J = nodes.ij[:, 1] - j0
    N = len(nodes)
    h = nodes.h
    rows_all = []
    for di, dj in ((1, 0), (0, 1)):
        def nb(sign):
            ii, jj = I + sign * di, J + sign * dj
            ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
            idx = np.full(N, -1)
            idx[ok] = grid[jj[ok], ii[ok]]
            return idx

        fwd, bwd = nb(1), nb(-1)
        both = (fwd >= 0) & (bwd >= 0)
        only_f = (fwd >= 0) & ~both
        only_b = (bwd >= 0) & ~both
        ar = np.arange(N)
        r = np.concatenate([ar[both], ar[both], ar[only_f], ar[only_f], ar[only_b], ar[only_b]])
        c = np.concatenate([fwd[both], bwd[both], fwd[only_f], ar[only_f], ar[only_b], bwd[only_b]])
        nb_ = int(both.sum())
        nf = int(only_f.sum())
        nbk = int(only_b.sum())
        v = np.concatenate([
            np.full(nb_, 0.5 / h), np.full(nb_, -0.5 / h),
            np.full(nf, 1.0 / h), np.full(nf, -1.0 / h),
            np.full(nbk, 1.0 / h), np.full(nbk, -1.0 / h),
        ])
        rows_all.append(sparse.csr_matrix((v, (r, c)), shape=(N, N)))
    return rows_all[0], rows_all[1]


@dataclass(eq=False)
class EnergyOperator:
    """The discrete energy as explicit node pairs.

    ``E(u) = h^n sum_x [ sum_y w_xy |u_x - u_y|^p + C_x |grad u(x)|^p ]``
    with the same pairs, weights and cell correction as
    :func:`fractional_energy`.
    """

    nodes: NodeSet
    params: ExponentParams
    src: np.ndarray
    dst: np.ndarray
    w: np.ndarray
    corr: np.ndarray
    Dx: object
    Dy: object

    @property
    def cell(self) -> float:
        return self.nodes.h**self.params.n

    def energy(self, u: np.ndarray) -> float:
        p = self.params.p
        diff = np.abs(u[self.src] - u[self.dst])
        pair = float(np.sum(self.w * diff**p))
        gn = np.hypot(self.Dx @ u, self.Dy @ u)
        return (pair + float(np.sum(self.corr * gn**p))) * self.cell

    def gradient(self, u: np.ndarray) -> np.ndarray:
        p = self.params.p
        d = u[self.src] - u[self.dst]
        t = p * self.w * np.abs(d) ** (p - 1) * np.sign(d)
        g = np.bincount(self.src, t, minlength=len(u)) - np.bincount(self.dst, t, minlength=len(u))
        gx, gy = self.Dx @ u, self.Dy @ u
        gn = np.hypot(gx, gy)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(gn > 0, p * self.corr * gn ** (p - 2), 0.0)
        g = g + self.Dx.T @ (fac * gx) + self.Dy.T @ (fac * gy)
        return g * self.cell

    def quadratic_form(self):
        """Sparse symmetric ``K`` with ``E(u) = u^T K u`` (``p = 2`` only)."""
        from scipy import sparse

        if self.params.p != 2:
            raise DomainError("quadratic form requires p = 2", p=self.params.p)
        N = len(self.nodes)
        a, b, w = self.src, self.dst, self.w
        L = sparse.coo_matrix(
            (np.concatenate([w, w, -w, -w]), (np.concatenate([a, b, a, b]), np.concatenate([a, b, b, a]))),
            shape=(N, N),
        ).tocsr()
        C = sparse.diags(self.corr)
        G = self.Dx.T @ C @ self.Dx + self.Dy.T @ C @ self.Dy
        K = (L + G) * self.cell
        return ((K + K.T) * 0.5).tocsr()


def energy_operator(nodes: NodeSet, params: ExponentParams) -> EnergyOperator:
    n, p, delta, tau = params.n, params.p, params.delta, params.tau
    if n != 2:
        raise DomainError("energy operator implemented for n = 2", n=n)
    h = nodes.h
    grid, (i0, j0) = nodes.lattice()
    ny, nx = grid.shape
    rad = tau * nodes.d / h
    offs, orad = _offsets(float(rad.max()))
    I = nodes.ij[:, 0] - i0
    J = nodes.ij[:, 1] - j0
    src, dst, w = [], [], []
    cell = h**n
    for (di, dj), rr in zip(offs, orad):
        x = np.flatnonzero(rad > rr)
        if len(x) == 0:
            continue
        ii, jj = I[x] + di, J[x] + dj
        ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
        x = x[ok]
        y = grid[jj[ok], ii[ok]]
        hit = y >= 0
        src.append(x[hit])
        dst.append(y[hit])
        w.append(np.full(int(hit.sum()), cell / (rr * h) ** (n + p * delta)))
    a = p * (1.0 - delta)
    corr = angular_moment(p) / (2 * math.pi) * cell_radial_integral(h, tau * nodes.d, a)
    Dx, Dy = gradient_operators(nodes)
    cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt)
    return EnergyOperator(nodes, params, cat(src, np.int64), cat(dst, np.int64), cat(w, float), corr, Dx, Dy)
