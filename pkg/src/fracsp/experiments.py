"""Mushroom sharpness sweeps, log-log exponent fits, verdicts and the
pointwise Riesz-potential check."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core import ExponentParams, GeometryExponents, mushroom_energy_exponent
from .errors import DomainError, InsufficientDataError, ResolutionError
from .geometry import Domain, MushroomGeom, sample_interior
from .io import write_csv
from .seminorm import (
    GridFunction,
    _gradient,
    fractional_energy,
    g_u_field,
    lq_deviation,
    mushroom_test_function,
    riesz_apply,
)


@dataclass
class SweepResult:
    r: np.ndarray
    lhs: np.ndarray
    energy: np.ndarray
    rhs: np.ndarray
    h_energy: np.ndarray
    h_lhs: np.ndarray
    mean: np.ndarray
    q: float
    p: float
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.r)

    def csv_rows(self):
        for row in zip(self.r, self.lhs, self.energy, self.rhs):
            yield tuple(float(v) for v in row)

    def to_csv(self, path):
        return write_csv(path, ["r", "lhs", "energy", "rhs"], self.csv_rows())

    def with_q(self, q: float, lhs: np.ndarray) -> "SweepResult":
        return SweepResult(
            self.r, lhs, self.energy, self.energy ** (q / self.p), self.h_energy, self.h_lhs,
            self.mean, q, self.p, dict(self.extra),
        )


def collar_width(g: MushroomGeom, tau: float) -> float:
    """Depth below the stem mouth from which a localisation ball can reach
    into the stem, doubled: ``2 rho max(1, tau / sqrt(1 - tau^2))``."""
    if not tau < 1:
        raise DomainError("collar needs tau < 1", constraint="tau < 1", tau=tau)
    return 2.0 * g.rho * max(1.0, tau / math.sqrt(1.0 - tau * tau))


def mushroom_window(g: MushroomGeom, tau: float):
    """Box around the whole mushroom plus the collar."""
    W = collar_width(g, tau)
    half = max(g.r, g.rho + W)
    top = g.cap_center[1] + g.r
    return ((g.a - half, g.base - W), (g.a + half, top))


def stem_window(g: MushroomGeom, tau: float):
    """Box around the stem plus the collar on both ends.

    Outside it the test function is locally constant: a cap point above the
    stem at height ``t`` has ``d >= sqrt(rho^2 + t^2)`` only through the stem
    corners, so its ball reaches the stem only for ``t <= tau rho / sqrt(1 -
    tau^2)``, and cap points beside the stem are closer to a corner than to
    any stem node.  Every node carrying energy therefore lies in this box,
    and so do all nodes of a different value inside its ball.
    """
    W = collar_width(g, tau)
    return ((g.a - g.rho - W, g.base - W), (g.a + g.rho + W, g.base + g.height + W))


def active_mask(u: GridFunction, params: ExponentParams) -> np.ndarray:
    """Nodes where ``g_u`` can be nonzero.

    A node contributes only if its localisation ball holds a node with a
    different value, or its discrete gradient is nonzero.
    """
    v = u.values
    pts = u.nodes.points
    reach = params.tau * u.nodes.d * (1 + 1e-12)
    lo, hi = v.min(), v.max()
    out = (v > lo) & (v < hi)
    for at in (v == lo, v == hi):
        other = ~at
        if not other.any() or not at.any():
            continue
        dist, _ = cKDTree(pts[other]).query(pts[at], distance_upper_bound=float(reach[at].max()))
        out[at] |= dist <= reach[at]
    grad = _gradient(u)
    out |= np.hypot(grad[:, 0], grad[:, 1]) > 0
    return out


def _row(domain: Domain, i: int, params: ExponentParams, h_factor: float, lhs_cells: int, qs):
    g = domain.mushrooms[i]
    h_e = min(g.rho, g.height) / h_factor
    nodes = sample_interior(domain, h_e, stem_window(g, params.tau))
    u = mushroom_test_function(domain, i, nodes)
    if not np.any(u.values >= 1.0) or not np.any((u.values > 0) & (u.values < 1)):
        raise ResolutionError("grid does not resolve the mushroom", r=g.r, h_grid=h_e)
    energy = fractional_energy(u, params, mask=active_mask(u, params)).total
    h_l = g.r / lhs_cells
    lnodes = sample_interior(domain, h_l, mushroom_window(g, params.tau))
    ul = mushroom_test_function(domain, i, lnodes)
    omega = domain.measure
    background = max(omega - lnodes.measure, 0.0)
    lhs = [lq_deviation(ul, q, background_measure=background) for q in qs]
    cell = h_l**domain.n
    mean = float(np.sum(ul.values) * cell / (lnodes.measure + background))
    return energy, lhs, h_e, h_l, mean, len(nodes)


def sharpness_sweep(
    domain: Domain,
    params: ExponentParams,
    r_list=None,
    h_factor: float = 8.0,
    lhs_cells: int = 32,
    threads: int | None = None,
    extra_q=(),
) -> SweepResult:
    """Energy and L^q deviation of each mushroom's test function.

    The energy of mushroom ``i`` is computed on its stem and a collar at ``h_grid = min(rho, height) / h_factor``; the deviation on a separate grid
    ``h = r / lhs_cells`` over the whole mushroom, the rest of the domain
    entering as a zero-valued background of known measure.
    """
    if not domain.mushrooms:
        raise DomainError("domain has no mushrooms")
    sizes = [m.r for m in domain.mushrooms]
    if r_list is None:
        idx = list(range(len(sizes)))
    else:
        idx = []
        for r in r_list:
            hits = [k for k, s in enumerate(sizes) if math.isclose(s, r, rel_tol=1e-12)]
            if not hits:
                raise DomainError(f"no mushroom of size {r}", r=r)
            idx.append(hits[0])
    idx = sorted(idx, key=lambda k: -sizes[k])
    if h_factor < 8.0:
        raise ResolutionError("h_grid must resolve the stem (h_factor >= 8)", h_factor=h_factor)
    qs = [params.q, *extra_q]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda k: _row(domain, k, params, h_factor, lhs_cells, qs), idx))
    energy = np.array([row[0] for row in rows])
    lhs_all = np.array([row[1] for row in rows])
    res = SweepResult(
        r=np.array([sizes[k] for k in idx]),
        lhs=lhs_all[:, 0],
        energy=energy,
        rhs=energy ** (params.q / params.p),
        h_energy=np.array([row[2] for row in rows]),
        h_lhs=np.array([row[3] for row in rows]),
        mean=np.array([row[4] for row in rows]),
        q=params.q,
        p=params.p,
        extra={"lhs_by_q": {float(q): lhs_all[:, j] for j, q in enumerate(qs)},
               "energy_nodes": [row[5] for row in rows]},
    )
    return res


@dataclass(frozen=True)
class ExponentFit:
    slope_lhs: float
    slope_energy: float
    rms_lhs: float
    rms_energy: float
    rows: int


def _ols(x, y):
    if len(x) == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return float(slope), 0.0
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


def fit_exponents(result: SweepResult) -> ExponentFit:
    """Least-squares slopes of ``log lhs`` and ``log energy`` against ``log r``."""
    r, lhs, en = map(np.asarray, (result.r, result.lhs, result.energy))
    if len(r) < 2:
        raise InsufficientDataError("at least two rows are needed for a slope", rows=len(r))
    if np.any(r <= 0) or np.any(lhs <= 0) or np.any(en <= 0):
        raise DomainError("log-log fit needs positive entries")
    x = np.log(r)
    sl, rl = _ols(x, np.log(lhs))
    se, re_ = _ols(x, np.log(en))
    return ExponentFit(sl, se, rl, re_, int(len(r)))


def verdict(params: ExponentParams, geom: GeometryExponents, fit: ExponentFit, q: float | None = None) -> dict:
    """Decide whether the inequality fails asymptotically along the sweep.

    With ``lhs ~ r^L`` and ``energy ~ r^E`` the ratio
    ``lhs / energy^{q/p} ~ r^{L - E q/p}`` blows up iff ``E q/p - L > 0``.
    The gap is compared against ``margin = max(0.2, 2 * residual rms)``;
    within the margin the verdict is inconclusive.
    """
    q = params.q if q is None else q
    p, n = params.p, params.n
    gap = fit.slope_energy * q / p - fit.slope_lhs
    margin = max(0.2, 2.0 * max(fit.rms_energy * q / p, fit.rms_lhs))
    if gap > margin:
        status = "violated"
    elif gap < -margin:
        status = "not violated"
    else:
        status = "inconclusive"
    predicted = mushroom_energy_exponent(params, geom.sigma, geom.h)
    return {
        "q": q,
        "status": status,
        "gap": gap,
        "margin": margin,
        "slope_energy": fit.slope_energy,
        "slope_lhs": fit.slope_lhs,
        "predicted_energy_slope": predicted,
        "predicted_lhs_slope": float(n),
        "energy_slope_consistent": abs(fit.slope_energy - predicted) <= margin,
        "lhs_slope_consistent": abs(fit.slope_lhs - n) <= margin,
        "critical_q_from_fit": n * p / fit.slope_energy if fit.slope_energy > 0 else None,
    }


def pointwise_potential_check(
    u: GridFunction, params: ExponentParams, B0_center=None, B0_radius=None, floor: float = 1e-12
) -> dict:
    """Ratios ``|u(x) - u_B0| / I_delta(g_u^{1/p})(x)`` over the nodes.

    ``u_B0`` is the node mean over the base ball (default
    ``B(x0, d(x0)/8)``).  Nodes whose denominator is below
    ``floor * max denominator`` are skipped.
    """
    dom = u.domain
    c = np.asarray(dom.x0 if B0_center is None else B0_center, float)
    rad = float(dom.dist(c)[0]) / 8.0 if B0_radius is None else B0_radius
    inb = np.hypot(*(u.nodes.points - c).T) < rad
    if not inb.any():
        raise DomainError("base ball contains no nodes", radius=rad)
    num = np.abs(u.values - u.values[inb].mean())
    if not np.any(num > 0):
        return {"max_ratio": 0.0, "nodes": int(len(num)), "used": int(len(num))}
    g = g_u_field(u, params) ** (1.0 / params.p)
    den = riesz_apply(u.nodes, g, params.delta)
    ok = den > floor * float(np.max(den)) if np.max(den) > 0 else np.zeros(len(den), bool)
    if not ok.any():
        raise InsufficientDataError("denominator never exceeds the floor")
    ratio = num[ok] / den[ok]
    return {
        "max_ratio": float(ratio.max()),
        "median_ratio": float(np.median(ratio)),
        "nodes": int(len(num)),
        "used": int(ok.sum()),
        "argmax": u.nodes.points[np.flatnonzero(ok)[np.argmax(ratio)]].tolist(),
    }


def random_smooth_function(nodes, seed: int, modes: int = 4) -> GridFunction:
    """Seeded random trigonometric polynomial of low degree."""
    rng = np.random.default_rng(seed)
    x, y = nodes.points[:, 0], nodes.points[:, 1]
    v = np.zeros(len(nodes))
    for _ in range(modes):
        kx, ky = rng.uniform(-3, 3, size=2)
        ph = rng.uniform(0, 2 * math.pi)
        v += rng.standard_normal() * np.cos(kx * x + ky * y + ph)
    return GridFunction(nodes, v)
