"""Exponent parameters and closed-form critical exponents.

All formulas are evaluated in double precision.  Degenerate ranges are
reported through an ``empty`` flag instead of raising, so that experiments
can probe parameters outside the admissible region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError


@dataclass(frozen=True)
class ExponentParams:
    """The tuple ``(n, p, q, delta, tau)`` of the localized inequality.

    ``q`` defaults to ``p``; ``tau`` is the inflation factor of the
    localization ball ``B(x, tau * d(x))``.
    """

    n: int = 2
    p: float = 2.0
    q: float | None = None
    delta: float = 0.5
    tau: float = 0.5

    def __post_init__(self):
        if self.q is None:
            object.__setattr__(self, "q", float(self.p))
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("n must be an integer >= 2", field="n", value=self.n)
        if not self.p >= 1:
            raise DomainError("p must satisfy p >= 1", field="p", value=self.p)
        if not self.q >= self.p:
            raise DomainError("q must satisfy q >= p", field="q", value=self.q)
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)", field="delta", value=self.delta)
        if not self.tau > 0:
            raise DomainError("tau must be positive", field="tau", value=self.tau)

    @property
    def sobolev_gap(self) -> float:
        """``n - p*delta``; positive exactly when ``p < n/delta``."""
        return self.n - self.p * self.delta

    def require_subcritical(self):
        if not self.p < self.n / self.delta:
            raise DomainError(
                "requires p < n/delta",
                constraint="p < n/delta",
                p=self.p,
                bound=self.n / self.delta,
            )


@dataclass(frozen=True)
class GeometryExponents:
    """Geometric exponents: John exponent ``s``, QHBC exponent ``beta`` and
    the mushroom stem-radius / stem-height exponents ``sigma`` and ``h``."""

    s: float = 1.0
    beta: float = 1.0
    sigma: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if not self.s >= 1:
            raise DomainError("s must satisfy s >= 1", field="s", value=self.s)
        if not 0 < self.beta <= 1:
            raise DomainError("beta must lie in (0, 1]", field="beta", value=self.beta)
        if not self.sigma >= 1:
            raise DomainError("sigma must satisfy sigma >= 1", field="sigma", value=self.sigma)
        if not self.h >= 1:
            raise DomainError("h must satisfy h >= 1", field="h", value=self.h)


class Threshold(NamedTuple):
    value: float
    empty: bool


class OpenInterval(NamedTuple):
    lower: float
    upper: float
    empty: bool


def critical_q_sjohn(params: ExponentParams, s: float) -> float:
    """Upper end of the admissible ``q`` range on an s-John domain.

    Returns ``n p / (s (n - p delta) + (s - 1)(p - 1))``.
    """
    params.require_subcritical()
    n, p = params.n, params.p
    gap = params.sobolev_gap
    if not s >= 1:
        raise DomainError("requires s >= 1", constraint="s >= 1", s=s)
    if not s < n / gap:
        raise DomainError(
            "requires s < n/(n - p*delta)", constraint="s < n/(n-p*delta)", s=s, bound=n / gap
        )
    return n * p / (s * gap + (s - 1.0) * (p - 1.0))


def critical_q_qhbc(params: ExponentParams, beta: float) -> Threshold:
    """Upper end of the ``q`` range for a beta-QHBC domain.

    The value is ``(2 beta / (1 + beta)) * n p / (n - p delta)``; the range
    ``[p, value)`` is flagged empty when ``value <= p``.
    """
    if not 0 < beta <= 1:
        raise DomainError("beta must lie in (0, 1]", constraint="0 < beta <= 1", beta=beta)
    params.require_subcritical()
    value = (2.0 * beta / (1.0 + beta)) * params.n * params.p / params.sobolev_gap
    return Threshold(value, value <= params.p)


def admissible_p_range_qhbc(n: int, delta: float, beta: float) -> OpenInterval:
    """Open interval of ``p`` for which the QHBC result applies."""
    if not 0 < beta <= 1:
        raise DomainError("beta must lie in (0, 1]", constraint="0 < beta <= 1", beta=beta)
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)", constraint="0 < delta < 1", delta=delta)
    lower = (n - n * 2.0 * beta / (1.0 + beta)) / delta
    upper = float(n)
    return OpenInterval(lower, upper, lower >= upper)


def mushroom_energy_exponent(params: ExponentParams, sigma: float, h: float) -> float:
    """Predicted log-log slope of the test-function energy against size ``r``.

    For a stem of radius ``r**sigma`` and height ``r**h`` this is
    ``sigma (n - p delta) + (p - 1)(sigma - h)``.
    """
    if not sigma >= 1:
        raise DomainError("sigma must satisfy sigma >= 1", constraint="sigma >= 1", sigma=sigma)
    if not h >= 1:
        raise DomainError("h must satisfy h >= 1", constraint="h >= 1", h=h)
    return sigma * params.sobolev_gap + (params.p - 1.0) * (sigma - h)


def exponent_table(params: ExponentParams, geom: GeometryExponents) -> dict:
    """Every closed-form exponent for a parameter set, used by reports."""
    out = {
        "p_star": params.n * params.p / params.sobolev_gap if params.sobolev_gap > 0 else None,
        "mushroom_energy_exponent": mushroom_energy_exponent(params, geom.sigma, geom.h),
    }
    try:
        out["critical_q_sjohn"] = critical_q_sjohn(params, geom.s)
    except DomainError as exc:
        out["critical_q_sjohn"] = None
        out["critical_q_sjohn_error"] = str(exc)
    try:
        thr = critical_q_qhbc(params, geom.beta)
        out["critical_q_qhbc"] = thr.value
        out["critical_q_qhbc_empty"] = thr.empty
    except DomainError as exc:
        out["critical_q_qhbc"] = None
        out["critical_q_qhbc_error"] = str(exc)
    rng = admissible_p_range_qhbc(params.n, params.delta, geom.beta)
    out["p_range_qhbc"] = [rng.lower, rng.upper]
    out["p_range_qhbc_empty"] = rng.empty
    return out
