"""Command line front end: ``fracsp COMMAND CONFIG.json [--output-dir DIR]``.

Exit codes: 0 on success, 2 on a config schema violation (the error JSON
names the field path), 3 on a numerical or construction failure (the error
JSON is the module's error payload).
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import pydantic
import scipy

from . import __version__
from .capacity import (
    CapacityProblem,
    SolverSettings,
    capacity_inequality_check,
    random_target_set,
    relative_capacity,
    sp_constant_estimate,
    equivalence_factor,
)
from .chains import build_chain, verify_chain
from .config import COMMANDS, ConfigError, RunConfig, config_hash, load_config
from .core import (
    GeometryExponents,
    admissible_p_range_qhbc,
    critical_q_qhbc,
    critical_q_sjohn,
    exponent_table,
)
from .errors import DomainError, FracSPError
from .experiments import (
    fit_exponents,
    pointwise_potential_check,
    random_smooth_function,
    sharpness_sweep,
    verdict,
)
from .geometry import Domain, domain_from_config, sample_interior
from .io import write_csv, write_json
from .quasihyperbolic import (
    build_graph,
    estimate_qhbc_beta,
    qh_geodesic,
    shadow_scaling_fit,
    shadows,
    stem_region,
)
from .seminorm import GridFunction, fractional_energy, mushroom_test_function
from .whitney import decompose, verify


class Run:
    """State shared by one command invocation."""

    def __init__(self, cfg: RunConfig, out: Path, threads: int | None):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.opts = cfg.command_options()
        self.artifacts: list[str] = []
        self._domain = None

    @property
    def domain(self) -> Domain:
        if self._domain is None:
            self._domain = domain_from_config(self.cfg.domain.model_dump())
        return self._domain

    @property
    def params(self):
        return self.cfg.exponents.params()

    @property
    def seed(self) -> int:
        return self.cfg.solver.seed if self.cfg.solver.seed is not None else 0

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.artifacts.append(name)

    def json(self, name, payload):
        write_json(self.out / name, payload)
        self.artifacts.append(name)


def _function(run: Run, spec, nodes) -> GridFunction:
    if spec.kind == "linear":
        c = np.asarray(spec.coef, float)
        return GridFunction(nodes, nodes.points @ c)
    if spec.kind == "constant":
        return GridFunction(nodes, np.full(len(nodes), spec.value))
    if spec.kind == "mushroom":
        if not 0 <= spec.index < len(run.domain.mushrooms):
            raise DomainError("mushroom index out of range", index=spec.index)
        return mushroom_test_function(run.domain, spec.index, nodes)
    return random_smooth_function(nodes, run.seed)


# ------------------------------------------------------------------ commands


def cmd_whitney(run: Run) -> dict:
    dec = decompose(run.domain, run.cfg.grid.j_max)
    rep = verify(dec, mc_samples=run.opts.mc_samples)
    run.csv("whitney.csv", ["j", "ix", "iy", "diam", "dist"], dec.csv_rows())
    run.json("whitney.json", rep)
    return {"cubes": rep["cubes"], "violations": rep["violations"]}


def cmd_qh_dist(run: Run) -> dict:
    o = run.opts
    geo = qh_geodesic(run.domain, o.x, o.y, run.cfg.grid.h_grid, window=o.window)
    run.csv("geodesic.csv", ["x", "y"], (tuple(p) for p in geo.points))
    out = {"x": o.x, "y": o.y, "distance": geo.length, "h_grid": run.cfg.grid.h_grid}
    run.json("qh_dist.json", out)
    return {"distance": geo.length}


def cmd_qh_beta(run: Run) -> dict:
    o = run.opts
    fit = estimate_qhbc_beta(
        run.domain, run.cfg.grid.h_grid, o.sample_count, seed=run.seed, bins=o.bins, window=o.window
    )
    run.csv("beta_envelope.csv", ["log_ratio", "k"], zip(fit.envelope_x, fit.envelope_y))
    out = {
        "beta_hat": fit.beta_hat,
        "c0_hat": fit.c0_hat,
        "slope": fit.slope,
        "samples": fit.samples,
        "bins": fit.bins,
    }
    run.json("qh_beta.json", out)
    return {"beta_hat": fit.beta_hat}


def cmd_shadows(run: Run) -> dict:
    dom = run.domain
    dec = decompose(dom, run.cfg.grid.j_max)
    rec = shadows(dec, dom, run.cfg.grid.h_grid)
    region = stem_region(dom) if run.opts.region == "stems" else None
    fit = shadow_scaling_fit(rec, dec, region=region)
    run.csv("shadows.csv", ["diam_q", "past_size", "diam_shadow", "shadow_size"], rec.csv_rows())
    q0_in_all = bool(np.all(rec.past[:, dec.q0].toarray().ravel()[rec.resolved] > 0))
    out = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual_rms": fit.residual_rms,
        "cubes": fit.cubes,
        "generations": fit.generations,
        "resolved": int(rec.resolved.sum()),
        "q0_in_every_past": q0_in_all,
    }
    run.json("shadows.json", out)
    return {"slope": fit.slope}


def _chain_targets(run: Run) -> list:
    dom, o = run.domain, run.opts
    targets = [tuple(t) for t in o.targets]
    if o.cap_centers:
        targets += [tuple(m.cap_center) for m in dom.mushrooms]
    if o.random_targets:
        rng = np.random.default_rng(run.seed)
        (x0, y0), (x1, y1) = dom.bbox
        found = []
        while len(found) < o.random_targets:
            pts = np.column_stack([rng.uniform(x0, x1, 256), rng.uniform(y0, y1, 256)])
            found += [tuple(p) for p in pts[dom.dist(pts) > 0]]
        targets += found[: o.random_targets]
    if not targets:
        raise DomainError("no chain targets given")
    return targets


def cmd_chain(run: Run) -> dict:
    dom, o = run.domain, run.opts
    s = o.s if o.s is not None else run.cfg.geometry.s
    h = run.cfg.grid.h_grid
    graph = build_graph(dom, h)
    rows, reports = [], []
    for t, x in enumerate(_chain_targets(run)):
        ch = build_chain(dom, x, s, o.M, h, graph=graph)
        rep = verify_chain(ch)
        rows += [(t, *row) for row in ch.csv_rows()]
        reports.append({"target": list(x), **rep.as_dict()})
    run.csv("chains.csv", ["chain", "i", "x", "y", "r"], rows)
    c6 = [r["c6_count"] for r in reports if r["c6_count"] is not None]
    summary = {
        "chains": len(reports),
        "all_valid": all(r["valid"] for r in reports),
        "c6_fitted": max(c6) if c6 else None,
        "M": o.M,
        "s": s,
    }
    run.json("chains.json", {"summary": summary, "chains": reports})
    return summary


def cmd_energy(run: Run) -> dict:
    nodes = sample_interior(run.domain, run.cfg.grid.h_grid)
    u = _function(run, run.opts.function, nodes)
    br = fractional_energy(u, run.params, correction=run.opts.correction)
    rows = ((x, y, v, g) for (x, y), v, g in zip(nodes.points, u.values, br.g))
    run.csv("g_u.csv", ["x", "y", "value", "g"], rows)
    out = {"total": br.total, "correction_share": br.correction_share, "nodes": len(nodes)}
    run.json("energy.json", out)
    return out


def _capacity_problem(run: Run, nodes) -> CapacityProblem:
    o = run.opts
    s = run.cfg.solver
    probe = np.zeros(len(nodes), bool)
    far = np.argmax(np.hypot(*(nodes.points - np.asarray(o.B0_center or run.domain.x0)).T))
    probe[far] = True
    return CapacityProblem(
        nodes, run.params, probe, o.B0_center, o.B0_radius, SolverSettings(s.tol, s.max_iter, run.seed)
    )


def cmd_capacity(run: Run) -> dict:
    o = run.opts
    nodes = sample_interior(run.domain, run.cfg.grid.h_grid)
    prob = _capacity_problem(run, nodes)
    sets = [random_target_set(prob, run.seed + i, kind=o.set_kind) for i in range(o.random_sets)]
    rows = []
    for i, A in enumerate(sets):
        res = relative_capacity(prob.with_A(A), o.method)
        rows.append((i, prob.measure(A), res.value, res.iterations, res.residual, res.clamp_violations))
    run.csv("capacity.csv", ["set", "measure", "capacity", "iterations", "residual", "clamp_violations"], rows)
    check = capacity_inequality_check(prob, sets, o.method)
    out = {"empirical_constant": check["empirical_constant"], "sets": len(sets), **equivalence_factor(prob)}
    run.json("capacity.json", out)
    return {"empirical_constant": check["empirical_constant"]}


def cmd_best_constant(run: Run) -> dict:
    o = run.opts
    nodes = sample_interior(run.domain, run.cfg.grid.h_grid)
    cands = [random_smooth_function(nodes, run.seed + i) for i in range(o.random_candidates)]
    cands += [mushroom_test_function(run.domain, i, nodes) for i in range(len(run.domain.mushrooms))]
    est = sp_constant_estimate(nodes, run.params, cands, rayleigh=o.rayleigh, starts=o.starts, seed=run.seed)
    run.json("best_constant.json", est)
    return {"estimate": est["estimate"]}


def _sweep(run: Run, geom: GeometryExponents, critical: dict) -> dict:
    o = run.opts
    params = run.params
    res = sharpness_sweep(
        run.domain, params, r_list=o.r_list, h_factor=o.h_factor, lhs_cells=o.lhs_cells,
        threads=run.threads, extra_q=tuple(o.extra_q),
    )
    res.to_csv(run.out / "sweep.csv")
    run.artifacts.append("sweep.csv")
    verdicts = {}
    fits = {}
    for q, lhs in res.extra["lhs_by_q"].items():
        f = fit_exponents(res.with_q(q, lhs))
        fits[str(q)] = f.__dict__
        verdicts[str(q)] = verdict(params, geom, f, q)
    main = fits[str(float(params.q))]
    out = {
        "parameters": {**params.__dict__, **geom.__dict__},
        "slope_energy": main["slope_energy"],
        "slope_lhs": main["slope_lhs"],
        "rms_energy": main["rms_energy"],
        "rms_lhs": main["rms_lhs"],
        "fits": fits,
        "verdicts": verdicts,
        "critical": critical,
        "rows": {
            "r": res.r,
            "h_energy": res.h_energy,
            "h_lhs": res.h_lhs,
            "mean_correction": res.mean,
        },
    }
    run.json("sharpness.json", out)
    return {"slope_energy": out["slope_energy"], "slope_lhs": out["slope_lhs"]}


def _mushroom_exponents(run: Run):
    d = run.cfg.domain
    if d.type != "mushroom":
        raise DomainError("sharpness sweeps need a mushroom domain", type=d.type)
    return d.sigma, d.h


def cmd_sharpness_sjohn(run: Run) -> dict:
    sigma, h = _mushroom_exponents(run)
    if h != 1:
        raise DomainError("s-John mushrooms have stem height exponent h = 1", h=h)
    geom = GeometryExponents(s=sigma, sigma=sigma, h=1.0)
    try:
        crit = {"critical_q_sjohn": critical_q_sjohn(run.params, sigma)}
    except DomainError as exc:
        crit = {"critical_q_sjohn": None, "reason": str(exc)}
    return _sweep(run, geom, crit)


def cmd_sharpness_qhbc(run: Run) -> dict:
    sigma, h = _mushroom_exponents(run)
    if sigma > h:
        raise DomainError("QHBC mushrooms need sigma <= h", sigma=sigma, h=h)
    beta = 1.0 / (2.0 * sigma - 1.0)
    geom = GeometryExponents(beta=beta, sigma=sigma, h=h)
    try:
        thr = critical_q_qhbc(run.params, beta)
        crit = {"beta": beta, "critical_q_qhbc": thr.value, "empty": thr.empty}
    except DomainError as exc:
        crit = {"beta": beta, "critical_q_qhbc": None, "reason": str(exc)}
    return _sweep(run, geom, crit)


def cmd_potential_check(run: Run) -> dict:
    o = run.opts
    nodes = sample_interior(run.domain, run.cfg.grid.h_grid)
    u = _function(run, o.function, nodes)
    out = pointwise_potential_check(u, run.params, o.B0_center, o.B0_radius, floor=o.floor)
    run.json("potential_check.json", out)
    return {"max_ratio": out["max_ratio"]}


def cmd_report(run: Run) -> dict:
    params = run.params
    geom = run.cfg.geometry.exponents()
    table = exponent_table(params, geom)
    rng = admissible_p_range_qhbc(params.n, params.delta, geom.beta)
    table["admissible_p_qhbc"] = {"lower": rng.lower, "upper": rng.upper, "empty": rng.empty}
    table["parameters"] = {**params.__dict__, **geom.__dict__}
    run.json("report.json", table)
    return {"entries": len(table)}


HANDLERS = {
    "whitney": cmd_whitney,
    "qh-dist": cmd_qh_dist,
    "qh-beta": cmd_qh_beta,
    "shadows": cmd_shadows,
    "chain": cmd_chain,
    "energy": cmd_energy,
    "capacity": cmd_capacity,
    "best-constant": cmd_best_constant,
    "sharpness-sjohn": cmd_sharpness_sjohn,
    "sharpness-qhbc": cmd_sharpness_qhbc,
    "potential-check": cmd_potential_check,
    "report": cmd_report,
}


# --------------------------------------------------------------------- main


def _fail(code: int, payload: dict, out: Path | None) -> int:
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None and out.is_dir():
        (out / "error.json").write_text(text + "\n")
    return code


def _versions() -> dict:
    return {
        "fracsp": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
        "python": platform.python_version(),
    }


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracsp", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", type=Path, help="JSON run configuration")
    ap.add_argument("--output-dir", type=Path, default=Path("fracsp-out"))
    ap.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    ap.add_argument("--seed-override", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        data = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(2, {"kind": "validation_error", "errors": [{"path": "", "message": str(exc)}]}, out)
    if not isinstance(data, dict):
        return _fail(2, {"kind": "validation_error", "errors": [{"path": "", "message": "config must be a JSON object"}]}, out)
    try:
        cfg = load_config(data, args.command, args.seed_override)
    except ConfigError as exc:
        return _fail(2, {"kind": "validation_error", "errors": exc.errors}, out)
    threads = args.threads if args.threads is not None else os.cpu_count()
    run = Run(cfg, out, threads)
    t0 = time.perf_counter()
    try:
        summary = HANDLERS[cfg.command](run)
    except FracSPError as exc:
        return _fail(3, exc.payload, out)
    materialized = cfg.materialized()
    if cfg.domain is not None:
        materialized["domain"]["x0"] = list(run.domain.x0)
    manifest = {
        "command": cfg.command,
        "config": materialized,
        "config_hash": config_hash(materialized),
        "versions": _versions(),
        "wall_time": time.perf_counter() - t0,
        "threads": threads,
        "artifacts": sorted(run.artifacts),
        "summary": summary,
    }
    write_json(out / "manifest.json", manifest)
    print(json.dumps({"command": cfg.command, "output_dir": str(out), **summary}, default=float, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
