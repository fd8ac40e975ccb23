"""Run configuration schema for the command line front end.

Validation failures are reported as ``(path, message)`` pairs with dotted
paths such as ``exponents.delta``.
"""

from __future__ import annotations

import hashlib
import json
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import ExponentParams, GeometryExponents
from .errors import DomainError

COMMANDS = (
    "whitney",
    "qh-dist",
    "qh-beta",
    "shadows",
    "chain",
    "energy",
    "capacity",
    "best-constant",
    "sharpness-sjohn",
    "sharpness-qhbc",
    "potential-check",
    "report",
)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


Point = tuple[float, float]
Window = tuple[Point, Point]


class SquareDomain(_Block):
    type: Literal["square"]
    side: float = Field(1.0, gt=0)
    x0: Point | None = None


class RectangleDomain(_Block):
    type: Literal["rectangle"]
    lo: Point
    hi: Point
    x0: Point | None = None


class DiskDomain(_Block):
    type: Literal["disk"]
    radius: float = Field(1.0, gt=0)
    center: Point = (0.0, 0.0)
    x0: Point | None = None


class HalfPlaneDomain(_Block):
    type: Literal["halfplane"]
    width: float = Field(20.0, gt=0)
    height: float = Field(10.0, gt=0)
    x0: Point = (0.0, 1.0)


class MushroomDomain(_Block):
    type: Literal["mushroom"]
    r_list: list[float] = Field(min_length=1)
    sigma: float = Field(1.0, ge=1)
    h: float = Field(1.0, ge=1)
    side: float = Field(1.0, gt=0)
    attachments: list[float] | None = None
    x0: Point | None = None


DomainBlock = Annotated[
    Union[SquareDomain, RectangleDomain, DiskDomain, HalfPlaneDomain, MushroomDomain],
    Field(discriminator="type"),
]


class ExponentsBlock(_Block):
    n: int
    p: float
    q: float
    delta: float
    tau: float = 0.5

    @model_validator(mode="after")
    def _admissible(self):
        try:
            ExponentParams(self.n, self.p, self.q, self.delta, self.tau)
        except DomainError as exc:
            raise _PathError(exc.payload.get("field"), str(exc)) from exc
        return self

    def params(self) -> ExponentParams:
        return ExponentParams(self.n, self.p, self.q, self.delta, self.tau)


class GeometryBlock(_Block):
    s: float = 1.0
    beta: float = 1.0
    sigma: float = 1.0
    h: float = 1.0

    @model_validator(mode="after")
    def _admissible(self):
        try:
            GeometryExponents(self.s, self.beta, self.sigma, self.h)
        except DomainError as exc:
            raise _PathError(exc.payload.get("field"), str(exc)) from exc
        return self

    def exponents(self) -> GeometryExponents:
        return GeometryExponents(self.s, self.beta, self.sigma, self.h)


class GridBlock(_Block):
    h_grid: float = Field(2.0**-7, gt=0)
    j_max: int = Field(10, ge=0, le=16)


class SolverBlock(_Block):
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(100_000, gt=0)
    seed: int | None = None


# ------------------------------------------------------- per-command options


class FunctionSpec(_Block):
    """Grid function: ``linear`` (``coef . x``), ``mushroom`` (test function
    of mushroom ``index``), ``smooth`` (seeded random) or ``constant``."""

    kind: Literal["linear", "mushroom", "smooth", "constant"] = "linear"
    coef: Point = (1.0, 0.0)
    index: int = 0
    value: float = 1.0


class WhitneyOptions(_Block):
    mc_samples: int = Field(200_000, gt=0)


class QhDistOptions(_Block):
    x: Point
    y: Point
    window: Window | None = None


class QhBetaOptions(_Block):
    sample_count: int = Field(2000, gt=0)
    bins: int = Field(12, ge=2)
    window: Window | None = None


class ShadowsOptions(_Block):
    region: Literal["all", "stems"] = "all"


class ChainOptions(_Block):
    M: float = Field(5.0, gt=1)
    s: float | None = None
    targets: list[Point] = []
    random_targets: int = Field(0, ge=0)
    cap_centers: bool = False


class EnergyOptions(_Block):
    function: FunctionSpec = FunctionSpec()
    correction: bool = True


class CapacityOptions(_Block):
    method: Literal["auto", "direct", "pg"] = "auto"
    random_sets: int = Field(5, ge=1)
    set_kind: Literal["disk", "scatter"] = "disk"
    B0_center: Point | None = None
    B0_radius: float | None = Field(None, gt=0)


class BestConstantOptions(_Block):
    random_candidates: int = Field(5, ge=0)
    rayleigh: bool = True
    starts: int = Field(3, ge=1)


class SharpnessOptions(_Block):
    r_list: list[float] | None = None
    extra_q: list[float] = []
    h_factor: float = Field(8.0, ge=8.0)
    lhs_cells: int = Field(32, ge=4)


class PotentialOptions(_Block):
    function: FunctionSpec = FunctionSpec()
    B0_center: Point | None = None
    B0_radius: float | None = Field(None, gt=0)
    floor: float = Field(1e-12, ge=0)


class ReportOptions(_Block):
    pass


OPTIONS = {
    "whitney": WhitneyOptions,
    "qh-dist": QhDistOptions,
    "qh-beta": QhBetaOptions,
    "shadows": ShadowsOptions,
    "chain": ChainOptions,
    "energy": EnergyOptions,
    "capacity": CapacityOptions,
    "best-constant": BestConstantOptions,
    "sharpness-sjohn": SharpnessOptions,
    "sharpness-qhbc": SharpnessOptions,
    "potential-check": PotentialOptions,
    "report": ReportOptions,
}

NEEDS_DOMAIN = set(COMMANDS) - {"report"}
NEEDS_EXPONENTS = {
    "energy",
    "capacity",
    "best-constant",
    "sharpness-sjohn",
    "sharpness-qhbc",
    "potential-check",
    "report",
}


def needs_seed(command: str, options: BaseModel) -> bool:
    if command in ("qh-beta", "capacity", "best-constant"):
        return True
    if command == "chain":
        return options.random_targets > 0
    if command in ("energy", "potential-check"):
        return options.function.kind == "smooth"
    return False


class RunConfig(_Block):
    command: Literal[COMMANDS]  # type: ignore[valid-type]
    domain: DomainBlock | None = None
    exponents: ExponentsBlock | None = None
    geometry: GeometryBlock = GeometryBlock()
    grid: GridBlock = GridBlock()
    solver: SolverBlock = SolverBlock()
    options: dict[str, Any] = {}

    @model_validator(mode="after")
    def _command_blocks(self):
        if self.command in NEEDS_DOMAIN and self.domain is None:
            raise _missing("domain")
        if self.command in NEEDS_EXPONENTS and self.exponents is None:
            raise _missing("exponents")
        return self

    def command_options(self) -> BaseModel:
        return OPTIONS[self.command].model_validate(self.options)

    def materialized(self) -> dict:
        out = self.model_dump(mode="json")
        out["options"] = self.command_options().model_dump(mode="json")
        return out


class ConfigError(Exception):
    """Schema violation; ``errors`` is a list of ``{"path", "message"}``."""

    def __init__(self, errors: list[dict]):
        super().__init__("; ".join(f"{e['path']}: {e['message']}" for e in errors))
        self.errors = errors


class _PathError(ValueError):
    """Validator error naming the offending field below the current location."""

    def __init__(self, path, message):
        super().__init__(message)
        self.path = path


def _missing(path):
    return _PathError(path, f"block required for this command: {path}")


_TAGS = {"square", "rectangle", "disk", "halfplane", "mushroom"}


def _path(loc) -> str:
    parts = []
    for i, p in enumerate(loc):
        # discriminated unions insert the tag into the location
        if i > 0 and loc[i - 1] == "domain" and p in _TAGS:
            continue
        parts.append(str(p))
    return ".".join(parts)


def _errors(exc: ValidationError, prefix: str = "") -> list[dict]:
    out = []
    for e in exc.errors():
        path = _path(e["loc"])
        ctx = e.get("ctx") or {}
        err = ctx.get("error")
        if isinstance(err, _PathError) and err.path:
            path = ".".join(x for x in (path, err.path) if x)
        msg = str(err) if err is not None else e["msg"]
        full = ".".join(x for x in (prefix, path) if x)
        out.append({"path": full, "message": msg, "type": e["type"]})
    return out


def load_config(data: dict, command: str | None = None, seed_override: int | None = None) -> RunConfig:
    """Validate a config dict; ``command`` overrides or fills the command field."""
    data = dict(data)
    if command is not None:
        if "command" in data and data["command"] != command:
            raise ConfigError(
                [{"path": "command", "message": f"config is for {data['command']!r}, not {command!r}", "type": "mismatch"}]
            )
        data["command"] = command
    if seed_override is not None:
        solver = dict(data.get("solver") or {})
        solver["seed"] = seed_override
        data["solver"] = solver
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_errors(exc)) from None
    try:
        opts = cfg.command_options()
    except ValidationError as exc:
        raise ConfigError(_errors(exc, "options")) from None
    if needs_seed(cfg.command, opts) and cfg.solver.seed is None:
        raise ConfigError([{"path": "solver.seed", "message": "seed is required for randomized runs", "type": "missing"}])
    return cfg


def config_hash(materialized: dict) -> str:
    blob = json.dumps(materialized, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
