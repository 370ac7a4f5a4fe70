"""Command line front end.

Every command reads an optional JSON config (``--config``), writes its
artifacts below ``--out`` and prints a deterministic JSON record to stdout.
Exit codes: 0 ok, 1 error, 2 infeasible (unequal masses).

Config keys::

    {"mobility": {"kind": "quadratic", "a": 0, "b": 1},
     "p": 2,
     "grid": {"bounds": [[0, 1]], "cells": [32]},
     "mu0": "path/to/mu0.json" | {"density": [...]},
     "mu1": ...,
     "solver": {"steps": 16, "tol": 1e-6, ...},
     "heat": {"T": 2.0, "dt": 1e-3},
     "oracle": {"rho0": [0.2, 0.6], "rho1": [0.6, 0.2], "width": 0.5, "steps": 8},
     "properties": {"tolerance": null, "quick": false}}

Relative measure paths are resolved against the config file's directory.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any

import click
import numpy as np

from . import checks
from .dynamics import c_pd_constant, dilation_exponent
from .heat import comparison_constant, decay_report, dissipation_report, solve_neumann_heat
from .io import json_number, read_measure, write_curve, write_diagnostics, write_heat_csv, write_measure
from .measures import Grid, GridMeasure, ReferenceMeasure
from .mobility import ActionDensity, MobilitySpec
from .oracle import TwoCellInstance, two_cell_exact
from .solver import INFEASIBLE, MAX_ITERS, SolverConfig, compute_distance

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class UsageFailure(Exception):
    """Validation or I/O problem reported on stderr with exit code 1."""


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return json_number(obj)
    return obj


def _emit(record: dict[str, Any], out: Path | None, name: str) -> None:
    record = _clean(record)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_diagnostics(out / name, record)
    click.echo(json.dumps(record, sort_keys=True))


class Context:
    def __init__(self, config: dict[str, Any], base: Path, out: Path | None, seed: int):
        self.config = config
        self.base = base
        self.out = out
        self.seed = seed

    def phi(self) -> ActionDensity:
        mob = self.config.get("mobility", {"kind": "quadratic"})
        return ActionDensity(float(self.config.get("p", 2.0)), MobilitySpec.from_config(mob))

    def solver(self) -> SolverConfig:
        return SolverConfig.from_config(self.config.get("solver", {}))

    def reference(self) -> ReferenceMeasure:
        g = self.config.get("grid")
        if g is None:
            raise UsageFailure("inline measures need a 'grid' entry")
        grid = Grid(tuple(tuple(map(float, b)) for b in g["bounds"]), tuple(int(c) for c in g["cells"]))
        kind = g.get("reference", "lebesgue")
        if kind == "lebesgue":
            return ReferenceMeasure.lebesgue(grid)
        if kind == "gibbs":
            return ReferenceMeasure.gibbs(grid, np.asarray(g["potential"], dtype=float))
        raise UsageFailure(f"unknown reference {kind!r}")

    def measure(self, key: str) -> GridMeasure:
        entry = self.config.get(key)
        if entry is None:
            raise UsageFailure(f"config lacks {key!r}")
        if isinstance(entry, str):
            path = Path(entry)
            path = path if path.is_absolute() else self.base / path
            if not path.exists():
                raise UsageFailure(f"measure file {path} does not exist")
            return read_measure(path)
        ref = self.reference()
        return GridMeasure(ref, np.asarray(entry["density"], dtype=float).reshape(ref.grid.shape))


def _run(fn):
    """Turn validation errors into exit code 1 with a message on stderr."""
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except (UsageFailure, ValueError, KeyError, OSError, RuntimeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_ERROR)
        sys.exit(code or EXIT_OK)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON run configuration.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True,
              help="Seed for every random choice.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, out: str | None, seed: int) -> None:
    """Generalized Wasserstein distances with concave mobility."""
    config: dict[str, Any] = {}
    base = Path.cwd()
    if config_path is not None:
        path = Path(config_path)
        try:
            config = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: cannot read config: {exc}", err=True)
            sys.exit(EXIT_ERROR)
        base = path.resolve().parent
    ctx.obj = Context(config, base, Path(out) if out else None, seed)


def _distance(ctx: Context, with_curve: bool) -> int:
    phi = ctx.phi()
    mu0, mu1 = ctx.measure("mu0"), ctx.measure("mu1")
    res = compute_distance(mu0, mu1, phi, ctx.solver())
    if with_curve and ctx.out is not None and res.geodesic is not None:
        write_curve(ctx.out / "geodesic", res.geodesic, phi)
    _emit(res.diagnostics(), ctx.out, "diagnostics.json")
    if res.status == INFEASIBLE:
        return EXIT_INFEASIBLE
    if res.status == MAX_ITERS:
        click.echo(f"warning: stopped at max_iter with residual {res.residual:.3e}", err=True)
    return EXIT_OK


@main.command()
@click.pass_obj
@_run
def distance(ctx: Context) -> int:
    """Distance between the measures 'mu0' and 'mu1'."""
    return _distance(ctx, with_curve=False)


@main.command()
@click.pass_obj
@_run
def geodesic(ctx: Context) -> int:
    """Distance plus the geodesic frames under OUT/geodesic."""
    return _distance(ctx, with_curve=True)


@main.command()
@click.pass_obj
@_run
def properties(ctx: Context) -> int:
    """Seeded property suites; nonzero exit when any property fails."""
    opts = ctx.config.get("properties", {})
    cfg = SolverConfig.from_config(ctx.config["solver"]) if "solver" in ctx.config else None
    results = checks.run_all(ctx.seed, cfg, opts.get("tolerance"), bool(opts.get("quick", False)))
    for r in results:
        click.echo(r.line(), err=True)
    constants = {"C_2_1": c_pd_constant(2, 1), "C_2_2": c_pd_constant(2, 2),
                 "comparison": comparison_constant(MobilitySpec.quadratic(), 0.5, 2.0)}
    record = {"seed": ctx.seed, "passed": all(r.passed for r in results),
              "constants": constants, "properties": [r.to_dict() for r in results]}
    _emit(record, ctx.out, "properties.json")
    return EXIT_OK if record["passed"] else EXIT_ERROR


@main.command("heat-decay")
@click.pass_obj
@_run
def heat_decay(ctx: Context) -> int:
    """Neumann heat flow of 'mu0' with decay and entropy diagnostics."""
    opts = ctx.config.get("heat", {})
    T, dt = float(opts.get("T", 2.0)), float(opts.get("dt", 1e-3))
    mu0 = ctx.measure("mu0")
    h = ctx.phi().mobility
    traj = solve_neumann_heat(mu0, T, dt)
    decay = decay_report(traj, (h.a, h.b))
    dis = dissipation_report(traj, h)
    if ctx.out is not None:
        frames = ctx.out / "frames"
        frames.mkdir(parents=True, exist_ok=True)
        for k in range(len(traj.frames)):
            write_measure(frames / f"frame_{k:05d}.json", traj.measure_at(k))
        write_heat_csv(ctx.out / "heat.csv", traj.times, decay.l2_gap, decay.linf_gap,
                       dis.entropy, dis.fisher)
    record = {"T": T, "dt": dt, "rho_inf": traj.rho_inf,
              "l2_rate": decay.l2_rate, "linf_rate": decay.linf_rate,
              "gradient_ok": decay.gradient_ok, "gradient_ratio": decay.gradient_ratio,
              "entropy_margin": dis.worst_margin, "entropy_decreasing": dis.strictly_decreasing,
              "length": dis.length}
    _emit(record, ctx.out, "heat.json")
    return EXIT_OK


@main.command()
@click.option("--p", "ps", type=float, multiple=True, help="Exponents (default 1.5, 2, 3).")
@click.option("--d", "ds", type=int, multiple=True, help="Dimensions (default 1, 2, 3).")
@_run
def constants(ps: tuple[float, ...], ds: tuple[int, ...]) -> int:
    """Table of C_{p,d}, dilation exponents and comparison constants."""
    ps = ps or (1.5, 2.0, 3.0)
    ds = ds or (1, 2, 3)
    if any(p <= 1 for p in ps) or any(d < 1 for d in ds):
        raise UsageFailure("need p > 1 and d >= 1")
    h = MobilitySpec.quadratic()
    click.echo("p\td\tC_pd\texponent\tcomparison")
    for p in ps:
        comp = comparison_constant(h, 0.5, p)
        for d in ds:
            e = dilation_exponent(p, d)
            click.echo(f"{p:g}\t{d}\t{c_pd_constant(p, d):.10f}\t{e:g}\t{comp:.10f}")
    return EXIT_OK


@main.command()
@click.option("--compare/--no-compare", default=True, show_default=True,
              help="Also run the solver on the same instance.")
@click.pass_obj
@_run
def oracle(ctx: Context, compare: bool) -> int:
    """Exact two-cell value; seeded random instance unless 'oracle' is configured."""
    opts = ctx.config.get("oracle")
    mob = MobilitySpec.from_config(ctx.config.get("mobility", {"kind": "quadratic"}))
    p = float(ctx.config.get("p", 2.0))
    if opts is None:
        inst = checks.two_cell_instances(np.random.default_rng(ctx.seed), 1)[0]
        inst = TwoCellInstance(inst.rho0, inst.rho1, inst.width, mob, p, inst.steps, inst.weights)
    else:
        w = opts.get("weights")
        inst = TwoCellInstance(tuple(map(float, opts["rho0"])), tuple(map(float, opts["rho1"])),
                               float(opts.get("width", 0.5)), mob, p, int(opts.get("steps", 8)),
                               tuple(map(float, w)) if w is not None else None)
    m0, m1 = inst.masses()
    if abs(m0 - m1) > 1e-10 * max(1.0, abs(m0)):
        _emit({"exact": math.inf, "status": INFEASIBLE}, ctx.out, "oracle.json")
        return EXIT_INFEASIBLE
    record: dict[str, Any] = {"rho0": list(inst.rho0), "rho1": list(inst.rho1),
                              "weights": list(inst.cell_weights), "steps": inst.steps,
                              "exact": two_cell_exact(inst)}
    if compare:
        mu0, mu1 = checks.two_cell_measures(inst)
        cfg = SolverConfig(steps=inst.steps, tol=1e-8, max_iter=50000)
        res = compute_distance(mu0, mu1, ActionDensity(p, mob), cfg)
        record.update(solver=res.distance, status=res.status,
                      gap=abs(res.distance - record["exact"]))
    _emit(record, ctx.out, "oracle.json")
    return EXIT_OK


if __name__ == "__main__":
    main()
