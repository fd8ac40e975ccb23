"""Discrete relative capacity and the best Sobolev-Poincare constant.

The capacity of a node set ``A`` relative to a base ball ``B0`` is the least
energy of a grid function that is ``>= 1`` on ``A`` and ``0`` on ``B0``.
For ``p = 2`` the energy is a weighted graph Laplacian, so the minimiser is
the harmonic extension with ``u = 1`` on ``A``; for other ``p`` a projected
gradient method with backtracking is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import splu

from .core import ExponentParams
from .errors import ConvergenceError, DomainError, InsufficientDataError
from .geometry import NodeSet
from .seminorm import EnergyOperator, GridFunction, energy_operator, lq_deviation


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 100_000
    seed: int = 0


@dataclass(eq=False)
class CapacityProblem:
    nodes: NodeSet
    params: ExponentParams
    A: np.ndarray
    B0_center: tuple[float, float] | None = None
    B0_radius: float | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    _op: EnergyOperator | None = field(default=None, repr=False)

    def __post_init__(self):
        dom = self.nodes.domain
        if self.B0_center is None:
            self.B0_center = tuple(dom.x0)
        if self.B0_radius is None:
            self.B0_radius = float(dom.dist(np.array(self.B0_center))[0]) / 8.0
        A = np.asarray(self.A)
        if A.dtype != bool:
            mask = np.zeros(len(self.nodes), dtype=bool)
            mask[A.astype(np.int64)] = True
            A = mask
        self.A = A
        if not self.A.any():
            raise DomainError("target set A is empty")
        if not self.B0.any():
            raise DomainError("base ball B0 contains no nodes", radius=self.B0_radius)
        if np.any(self.A & self.B0):
            raise DomainError("A and B0 must be disjoint")

    @property
    def B0(self) -> np.ndarray:
        c = np.asarray(self.B0_center, float)
        return np.hypot(*(self.nodes.points - c).T) < self.B0_radius

    @property
    def operator(self) -> EnergyOperator:
        if self._op is None:
            self._op = energy_operator(self.nodes, self.params)
        return self._op

    def with_A(self, A) -> "CapacityProblem":
        return CapacityProblem(
            self.nodes, self.params, A, self.B0_center, self.B0_radius, self.solver, self._op
        )

    def measure(self, mask) -> float:
        return float(np.count_nonzero(mask)) * self.nodes.h**self.params.n


@dataclass(frozen=True)
class CapacityResult:
    value: float
    minimizer: GridFunction
    method: str
    iterations: int
    residual: float
    clamp_violations: int = 0


def _direct(prob: CapacityProblem) -> np.ndarray:
    K = prob.operator.quadratic_form()
    fixed = prob.A | prob.B0
    free = np.flatnonzero(~fixed)
    u = np.zeros(len(prob.nodes))
    u[prob.A] = 1.0
    if len(free):
        Kff = K[free][:, free].tocsc()
        rhs = -(K[free][:, np.flatnonzero(prob.A)] @ np.ones(int(prob.A.sum())))
        u[free] = splu(Kff).solve(rhs)
    return u


def _project(u, prob):
    u = np.clip(u, 0.0, 1.0)
    u[prob.A] = 1.0
    u[prob.B0] = 0.0
    return u


def _projected_gradient(prob: CapacityProblem, u0=None, check_clamp: bool = True):
    """Monotone accelerated projected gradient with backtracking.

    The step starts at 1 and is halved until the sufficient-decrease
    condition holds.  Iteration stops once an accepted step lowers the energy
    by a relative amount below ``tol`` while the projected-gradient residual
    ``max |u - P(u - s grad E(u))|`` at the current step ``s`` is below ``tol``.
    """
    op = prob.operator
    tol, max_iter = prob.solver.tol, prob.solver.max_iter
    E = op.energy
    x = _project(np.zeros(len(prob.nodes)) if u0 is None else np.asarray(u0, float), prob)
    fx = E(x)
    y = x.copy()
    t = 1.0
    step = 1.0
    clamp_bad = 0
    for it in range(1, max_iter + 1):
        fy = E(y)
        if check_clamp:
            yc = np.clip(y, 0.0, 1.0)
            if E(yc) > fy * (1 + 1e-12) + 1e-300:
                clamp_bad += 1
        gy = op.gradient(y)
        step = min(step * 2.0, 1.0)
        while True:
            z = _project(y - step * gy, prob)
            dz = z - y
            fz = E(z)
            if fz <= fy + gy @ dz + (dz @ dz) / (2 * step) + 1e-15 * abs(fy):
                break
            step *= 0.5
            if step < 1e-300:
                raise ConvergenceError("line search failed", iteration=it)
        # monotone variant: keep the better of z and the previous iterate
        accepted = fz <= fx
        x_new, f_new = (z, fz) if accepted else (x, fx)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + (t / t_new) * (z - x_new) + ((t - 1) / t_new) * (x_new - x)
        rel_dec = (fx - f_new) / max(abs(fx), 1e-300)
        x, fx, t = x_new, f_new, t_new
        if accepted and rel_dec < tol:
            # projected-gradient residual certifies stationarity
            res = float(np.max(np.abs(x - _project(x - step * op.gradient(x), prob))))
            if res < tol:
                return x, it, res, clamp_bad
        # restart the momentum when it stops helping
        if not accepted or fz > fy:
            t = 1.0
            y = x.copy()
    raise ConvergenceError(
        "projected gradient did not converge", iterations=max_iter, relative_decrease=float(rel_dec)
    )


def relative_capacity(prob: CapacityProblem, method: str = "auto") -> CapacityResult:
    """Approximate ``inf int g_u`` over ``u >= 1`` on ``A``, ``u = 0`` on ``B0``.

    ``method``: ``"direct"`` (``p = 2`` linear solve), ``"pg"`` (projected
    gradient) or ``"auto"`` (direct when ``p = 2``).
    """
    p = prob.params.p
    if method == "auto":
        method = "direct" if p == 2 else "pg"
    if method == "direct":
        if p != 2:
            raise DomainError("direct solve requires p = 2", p=p)
        u = np.clip(_direct(prob), 0.0, 1.0)
        it, res, bad = 1, 0.0, 0
    elif method == "pg":
        u, it, res, bad = _projected_gradient(prob)
    else:
        raise DomainError(f"unknown method {method!r}")
    val = prob.operator.energy(u)
    return CapacityResult(val, GridFunction(prob.nodes, u), method, it, float(res), bad)


# -------------------------------------------------------------------- tables


def random_target_set(prob: CapacityProblem, seed: int, kind: str = "disk") -> np.ndarray:
    """Seeded random node set away from ``B0``: a disk (default) or a
    scattered subset."""
    rng = np.random.default_rng(seed)
    pts = prob.nodes.points
    B0 = prob.B0
    for _ in range(1000):
        if kind == "disk":
            c = pts[rng.integers(len(pts))]
            r = rng.uniform(1.5, 6.0) * prob.nodes.h
            A = np.hypot(*(pts - c).T) <= r
        else:
            A = rng.random(len(pts)) < rng.uniform(0.02, 0.2)
        A &= ~B0
        # keep a one-node margin so A never touches B0
        far = np.hypot(*(pts - np.asarray(prob.B0_center)).T) > prob.B0_radius + 1.5 * prob.nodes.h
        A &= far
        if A.any():
            return A
    raise InsufficientDataError("could not draw a nonempty target set")


def capacity_inequality_check(prob: CapacityProblem, samples, method: str = "auto") -> dict:
    """Ratios ``|A|^{p/q} / cap(A)`` for each sampled target set."""
    p, q = prob.params.p, prob.params.q
    if not q >= p:
        raise DomainError("requires q >= p", p=p, q=q)
    rows = []
    for A in samples:
        sub = prob.with_A(A)
        res = relative_capacity(sub, method)
        meas = sub.measure(sub.A)
        rows.append(
            {"measure": meas, "capacity": res.value, "ratio": meas ** (p / q) / res.value}
        )
    ratios = np.array([r["ratio"] for r in rows])
    return {"rows": rows, "max_ratio": float(ratios.max()), "empirical_constant": float(ratios.max())}


# ------------------------------------------------------ Sobolev-Poincare C


def _quotient(op: EnergyOperator, u: GridFunction, q: float) -> float:
    e = op.energy(u.values)
    if not e > 0:
        return math.nan
    return lq_deviation(u, q) / e ** (q / op.params.p)


def rayleigh_ascent(op: EnergyOperator, starts: int = 3, seed: int = 0, tol: float = 1e-13, max_iter: int = 5000):
    """Largest ``sum |u - mean|^2 h^n / E(u)`` for ``p = 2``.

    Alternates an energy-preconditioned step ``v <- K^+ M v`` with
    normalisation (inverse iteration on the mean-zero subspace).
    """
    K = op.quadratic_form()
    N = K.shape[0]
    cell = op.cell
    # ground one node: K v = b is consistent for mean-zero b
    lu = splu(K[1:, 1:].tocsc())
    rng = np.random.default_rng(seed)
    best, best_v = -np.inf, None
    for _ in range(starts):
        v = rng.standard_normal(N)
        v -= v.mean()
        lam_old = 0.0
        for it in range(max_iter):
            b = cell * (v - v.mean())
            w = np.zeros(N)
            w[1:] = lu.solve(b[1:])
            w -= w.mean()
            v = w / np.linalg.norm(w)
            num = cell * float(v @ v)
            lam = num / float(v @ (K @ v))
            if abs(lam - lam_old) <= tol * abs(lam):
                break
            lam_old = lam
        if lam > best:
            best, best_v = lam, v
    return best, best_v


def dense_sp_constant(op: EnergyOperator) -> float:
    """Oracle for ``p = q = 2``: ``h^n / mu_min`` of ``K`` on mean-zero
    vectors (orthonormal complement of the constants)."""
    K = op.quadratic_form().toarray()
    N = K.shape[0]
    ones = np.ones((N, 1)) / math.sqrt(N)
    Q, _ = np.linalg.qr(np.hstack([ones, np.eye(N)[:, : N - 1]]))
    Z = Q[:, 1:]
    mu = linalg.eigh(Z.T @ K @ Z, eigvals_only=True, subset_by_index=[0, 0])[0]
    return op.cell / float(mu)


def sp_constant_estimate(
    nodes: NodeSet,
    params: ExponentParams,
    candidates=(),
    rayleigh: bool = True,
    starts: int = 3,
    seed: int = 0,
    op: EnergyOperator | None = None,
) -> dict:
    """Lower bound for the Sobolev-Poincare constant: the largest quotient
    ``int |u - u_mean|^q / (int g_u)^{q/p}`` over candidates, plus
    Rayleigh ascent when ``p = q = 2``."""
    op = energy_operator(nodes, params) if op is None else op
    q = params.q
    quots = []
    for c in candidates:
        u = c if isinstance(c, GridFunction) else GridFunction(nodes, c)
        quots.append(_quotient(op, u, q))
    quots = [x for x in quots if np.isfinite(x)]
    out = {"candidate_max": max(quots) if quots else None, "candidates": len(quots)}
    best = max(quots) if quots else -np.inf
    if rayleigh and params.p == 2 and q == 2:
        lam, v = rayleigh_ascent(op, starts=starts, seed=seed)
        out["rayleigh"] = lam
        best = max(best, lam)
    if not np.isfinite(best):
        raise InsufficientDataError("all candidates are constant; quotient undefined")
    out["estimate"] = float(best)
    return out


def equivalence_factor(prob: CapacityProblem) -> dict:
    """Constant relating the two empirical constants in the easy direction:
    ``C_cap <= 2^p max(1, (|Omega|/|B0|)^{p/q}) C_sp^{p/q}``."""
    p, q = prob.params.p, prob.params.q
    omega = prob.measure(np.ones(len(prob.nodes), bool))
    b0 = prob.measure(prob.B0)
    return {
        "omega": omega,
        "b0": b0,
        "two_power_q": 2.0**q,
        "omega_over_b0": omega / b0,
        "factor": 2.0**q * omega / b0,
        "easy_direction": 2.0**p * max(1.0, (omega / b0) ** (p / q)),
    }
