"""Command-line front end: ``relpot eval | simulate | verify``."""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import envelopes as env
from . import kernels as ker
from .errors import DomainError, LookupNameError, RelpotError
from .montecarlo import Cells, effective_workers, estimate_exit_law, estimate_green, estimate_mean_exit, \
    estimate_survival
from .special_fns import DEFAULT_QUAD, QuadSpec
from .subordinator import McConfig, ProcessParams, subordinator_laplace, theta_density
from .verify import _clean, config_hash, coverage_gaps, resolve_suite, run_suite, write_reports

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(RelpotError):
    pass


# ---------------------------------------------------------------------------
# configuration

_SECTIONS = {
    "process": {"alpha": float, "m": float, "d": int},
    "quad": {f.name: f.type for f in fields(QuadSpec)},
    "mc": {"n_samples": int, "dt": float, "seed": int, "workers": int},
    "output": {"path": str, "format": str},
}
_CASTS = {"float": float, "int": int, "str": str}


@dataclass
class RunConfig:
    params: ProcessParams
    quad: QuadSpec
    mc: McConfig
    output: str | None = None
    fmt: str = "csv"

    def to_dict(self):
        return {"params": {"alpha": self.params.alpha, "m": self.params.m, "d": self.params.d},
                "quad": asdict(self.quad),
                "mc": {"n_samples": self.mc.n_samples, "dt": self.mc.dt, "seed": self.mc.master_seed},
                "format": self.fmt}


def read_config_file(path) -> dict:
    """Flat key = value pairs grouped in sections; unknown sections or keys are rejected."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise UsageError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise UsageError(f"unknown config key {section}.{key}")
            cast = _SECTIONS[section][key]
            cast = _CASTS.get(cast, cast) if isinstance(cast, str) else cast
            try:
                values[(section, key)] = cast(raw)
            except ValueError as exc:
                raise UsageError(f"bad value for {section}.{key}: {raw!r}") from exc
    return values


def build_run_config(args) -> RunConfig:
    file_vals = read_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(section, key, flag, default):
        cli = getattr(args, flag, None)
        if cli is not None:
            return cli
        return file_vals.get((section, key), default)

    params = ProcessParams(pick("process", "alpha", "alpha", 1.0), pick("process", "m", "m", 1.0),
                           pick("process", "d", "d", 1))
    quad = QuadSpec(**{k: file_vals.get(("quad", k), getattr(DEFAULT_QUAD, k)) for k in _SECTIONS["quad"]})
    workers = pick("mc", "workers", "workers", 1)
    mc = McConfig(n_samples=pick("mc", "n_samples", "n", 100_000), dt=pick("mc", "dt", "dt", 0.02),
                  master_seed=pick("mc", "seed", "seed", 0), workers=effective_workers(workers))
    fmt = pick("output", "format", "format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    return RunConfig(params, quad, mc, pick("output", "path", "output", None), fmt)


# ---------------------------------------------------------------------------
# grids


def parse_axis(spec: str) -> np.ndarray:
    """A number, or the mini-language lo:hi:lin|log:n."""
    spec = spec.strip()
    if ":" not in spec:
        return np.array([float(spec)])
    parts = spec.split(":")
    if len(parts) != 4 or parts[2] not in ("lin", "log"):
        raise UsageError(f"grid spec {spec!r} is not lo:hi:lin|log:n")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[3])
    if n < 1:
        raise UsageError("grid needs at least one point")
    if parts[2] == "log":
        if lo <= 0 or hi <= 0:
            raise UsageError("log grids need positive end points")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def parse_values(spec: str, d: int = 1) -> list:
    """Values of one variable.

    Scalars: comma-separated numbers or grid specs, concatenated.  Points in
    d > 1: exactly d comma-separated components, each a number or a grid
    spec; the points are their tensor product.
    """
    parts = [p for p in spec.split(",") if p.strip()]
    if d == 1:
        return [float(v) for p in parts for v in parse_axis(p)]
    if len(parts) != d:
        raise UsageError(f"a point in d = {d} needs {d} comma-separated components")
    axes = [parse_axis(p) for p in parts]
    return [list(map(float, combo)) for combo in itertools.product(*axes)]


# ---------------------------------------------------------------------------
# eval registry: name -> (variables, point-valued variables, function)


def _domain_of(args, params):
    kind = (args.domain or "halfspace").lower()
    R = args.R_value
    if kind in ("halfspace", "halfline"):
        return ker.Domain.halfspace(params.d) if kind == "halfspace" else ker.Domain.halfline()
    if kind == "interval":
        return ker.Domain.interval(R)
    if kind == "ball":
        return ker.Domain.ball(R, params.d)
    raise UsageError(f"unknown domain {kind!r}; known: halfspace, halfline, interval, ball")


EVALS = {
    "levy": (("x",), ("x",), lambda p, v, q, a: ker.levy_density(v["x"], p)),
    "transition": (("t", "x"), ("x",), lambda p, v, q, a: ker.transition_density(v["t"], v["x"], p, q,
                                                                                   return_error=True)),
    "theta": (("t", "u"), (), lambda p, v, q, a: theta_density(v["t"], v["u"], p)),
    "laplace": (("t", "lam"), (), lambda p, v, q, a: subordinator_laplace(v["lam"], v["t"], p)),
    "potential-u1": (("x",), ("x",), lambda p, v, q, a: ker.potential_u1(v["x"], p)),
    "poisson1": (("x", "u"), ("x", "u"), lambda p, v, q, a: ker.poisson1_halfspace(v["x"], v["u"], p)),
    "green1": (("x", "y"), ("x", "y"), lambda p, v, q, a: ker.green1_halfspace(v["x"], v["y"], p, q,
                                                                               return_error=True)),
    "green-gauss": (("x", "y"), ("x", "y"), lambda p, v, q, a: ker.green_gauss(_domain_of(a, p), v["x"], v["y"])),
    "green-stable": (("x", "y"), ("x", "y"), lambda p, v, q, a: ker.green_stable_halfspace(v["x"], v["y"], p)),
    "env-green1": (("x", "y"), ("x", "y"), lambda p, v, q, a: env.env_green1(v["x"], v["y"], p)),
    "env-halfline-green": (("x", "y"), (), lambda p, v, q, a: env.env_green_halfline(v["x"], v["y"], p)),
    "env-tail": (("x", "t"), (), lambda p, v, q, a: env.env_tail_halfspace(v["x"], v["t"], p)),
    "env-exit-interval": (("x", "R"), (), lambda p, v, q, a: env.env_exit_interval(v["x"], v["R"], p)),
    "env-exit-ball": (("x", "R"), ("x",), lambda p, v, q, a: env.env_exit_ball(v["x"], v["R"], p)),
    "env-escape": (("x", "R"), (), lambda p, v, q, a: env.env_escape_prob(v["x"], v["R"], p)),
    "env-halfspace-green": (("x", "y"), ("x", "y"), lambda p, v, q, a: env.env_green_halfspace(v["x"], v["y"], p)),
    "env-interval-green": (("x", "y", "R"), (), lambda p, v, q, a: env.env_green_interval(v["x"], v["y"], v["R"], p)),
    "env-stable-interval": (("x", "y", "R"), (),
                            lambda p, v, q, a: env.env_green_stable_interval(v["x"], v["y"], v["R"], p)),
}


def _meta(run: RunConfig, command: str, extra: dict) -> dict:
    payload = {"command": command, "run": run.to_dict(), **extra}
    return {"seed": run.mc.master_seed, "config_hash": config_hash(payload), "version": __version__}


def _emit(rows, columns, meta, run: RunConfig, out):
    """Write rows as RFC-4180 CSV (metadata repeated in every row) or as one JSON document."""
    if run.fmt == "json":
        text = json.dumps(_clean({"meta": meta, "rows": rows}), sort_keys=True, indent=1) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = columns + ["seed", "config_hash", "version"]
        writer.writerow(cols)
        for row in rows:
            merged = {**row, **meta}
            writer.writerow([_cell(merged.get(c)) for c in cols])
        text = buf.getvalue()
    if run.output:
        Path(run.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return json.dumps(_clean(v))
    if isinstance(v, float):
        return repr(v)
    return v


def cmd_eval(args, out=sys.stdout) -> int:
    if args.what not in EVALS:
        print(f"unknown name {args.what!r}; known: {', '.join(sorted(EVALS))}", file=sys.stderr)
        return EXIT_USAGE
    run = build_run_config(args)
    p = run.params
    names, pointwise, fn = EVALS[args.what]
    raw = {"x": args.x, "y": args.y, "t": args.t, "u": args.u, "R": args.R, "lam": args.lam}
    args.R_value = float(parse_values(args.R)[0]) if args.R else None
    axes = []
    for name in names:
        if raw[name] is None:
            raise UsageError(f"{args.what} needs --{name}")
        axes.append(parse_values(raw[name], p.d if name in pointwise else 1))
    rows = []
    for combo in itertools.product(*axes):
        vals = dict(zip(names, combo))
        try:
            res = fn(p, {k: np.asarray(v) for k, v in vals.items()}, run.quad, args)
        except DomainError as exc:
            print(f"domain error at {json.dumps(vals)}: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        err = None
        if isinstance(res, tuple):
            res, err = res
        rows.append({**vals, "value": float(res), "error": None if err is None else float(err)})
    meta = _meta(run, "eval", {"what": args.what, "grid": raw, "domain": args.domain})
    _emit(rows, list(names) + ["value", "error"], meta, run, out)
    return EXIT_OK


def cmd_simulate(args, out=sys.stdout) -> int:
    run = build_run_config(args)
    p = run.params
    args.R_value = args.R
    domain = _domain_of(args, p)
    starts = parse_values(args.x, p.d)
    rows = []
    columns = ["x", "value", "std_error", "n", "dt", "capped_fraction"]
    for k, x0 in enumerate(starts):
        x0 = np.asarray(x0, float)
        row = {"x": x0.tolist() if p.d > 1 else float(x0), "dt": run.mc.dt}
        if args.kind == "survival":
            if args.t is None:
                raise UsageError("survival needs --t")
            est = estimate_survival(x0, args.t, domain, p, run.mc, stream=k)
        elif args.kind == "exit":
            est = estimate_mean_exit(x0, domain, p, run.mc, horizon=args.horizon, refine=not args.no_refine,
                                     stream=k)
            if est.refined is not None:
                row.update(refined_value=est.refined.value, refined_std_error=est.refined.std_error)
        elif args.kind == "exitlaw":
            if args.E is None:
                raise UsageError("exitlaw needs --E a,b")
            a, b = (float(v) for v in args.E.split(","))
            est = estimate_exit_law(x0, domain, (a, b), p, run.mc, horizon=args.horizon, stream=k)
        elif args.kind == "green":
            if args.cells is None:
                raise UsageError("green needs --cells lo:hi:n")
            lo, hi, n = args.cells.split(":")
            cells = Cells.uniform([float(lo)] * p.d, [float(hi)] * p.d, int(n))
            vals, se, res = estimate_green(x0, domain, cells, p, run.mc, horizon=args.horizon, stream=k)
            for centre, v, s in zip(cells.centers(), vals, se):
                rows.append({**row, "y": centre.tolist() if p.d > 1 else float(centre[0]), "value": float(v),
                             "std_error": float(s), "n": res.n,
                             "capped_fraction": res.extra["capped_fraction"]})
            continue
        else:
            raise UsageError(f"unknown kind {args.kind!r}")
        row.update(value=est.value, std_error=est.std_error, n=est.n, capped_fraction=est.capped_fraction)
        rows.append(row)
    if args.kind == "green":
        columns.insert(1, "y")
    if args.kind == "exit":
        columns += ["refined_value", "refined_std_error"]
    meta = _meta(run, "simulate", {"kind": args.kind, "domain": args.domain, "R": args.R, "x": args.x,
                                   "t": args.t, "E": args.E, "cells": args.cells, "horizon": args.horizon,
                                   "refine": not args.no_refine})
    _emit(rows, columns, meta, run, out)
    return EXIT_OK


def cmd_verify(args, out=sys.stdout) -> int:
    try:
        resolve_suite(args.suite)
    except LookupNameError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_USAGE
    run = build_run_config(args)
    params = run.params if args.alpha is not None else None
    reports = run_suite(args.suite, run.mc, params=params, quad=run.quad)
    outdir = Path(run.output or args.outdir)
    paths = write_reports(reports, outdir)
    meta = _meta(run, "verify", {"suite": args.suite, "alpha": args.alpha})
    missing = coverage_gaps(args.suite, reports)
    summary = {"meta": meta, "suite": args.suite, "missing": missing,
               "reports": [{"name": r.name, "file": Path(pth).name, "verdict": r.verdict}
                           for r, pth in zip(reports, paths)],
               "verdict": all(r.verdict for r in reports) and not missing}
    (outdir / "summary.json").write_text(json.dumps(_clean(summary), sort_keys=True, indent=1) + "\n")
    for r in reports:
        extra = f"spread={r.spread:.4g}" if r.kind == "ratio" else f"max_residual={r.max_residual:.3g}"
        alpha = r.params["alpha"] if r.kind == "ratio" else r.notes.get("params", {}).get("alpha", "all")
        print(f"{'PASS' if r.verdict else 'FAIL'} {r.name} alpha={alpha} {extra}", file=out)
    for name in missing:
        print(f"FAIL {name} not covered", file=out)
    print(f"seed={meta['seed']} config_hash={meta['config_hash']} version={meta['version']} "
          f"reports={outdir}", file=out)
    return EXIT_OK if summary["verdict"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def _common(sub):
    sub.add_argument("--config", help="INI file with [process], [quad], [mc], [output] sections")
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--m", type=float)
    sub.add_argument("--d", type=int)
    sub.add_argument("--n", type=int, help="Monte Carlo paths")
    sub.add_argument("--dt", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--workers", type=int, help="worker processes (capped by RELPOT_THREADS)")
    sub.add_argument("--format", choices=("csv", "json"))
    sub.add_argument("--output", help="output file (eval, simulate) or directory (verify)")


def build_parser():
    parser = argparse.ArgumentParser(prog="relpot", description="relativistic stable process kernels, "
                                     "simulation and verification of two-sided estimates")
    parser.add_argument("--version", action="version", version=f"relpot {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    ev = subs.add_parser("eval", help="evaluate a kernel or envelope on a grid")
    ev.add_argument("--what", required=True, help="one of: " + ", ".join(sorted(EVALS)))
    for name in ("x", "y", "t", "u", "R", "lam"):
        ev.add_argument(f"--{name}", help="number, list a,b,c or grid lo:hi:lin|log:n")
    ev.add_argument("--domain", help="for green-gauss: halfspace, halfline, interval, ball")
    _common(ev)

    sim = subs.add_parser("simulate", help="Monte Carlo estimates")
    sim.add_argument("--kind", required=True, choices=("survival", "exit", "green", "exitlaw"))
    sim.add_argument("--domain", default="halfspace")
    sim.add_argument("--R", type=float)
    sim.add_argument("--x", required=True, help="start point(s)")
    sim.add_argument("--t", type=float)
    sim.add_argument("--E", help="target interval a,b for exitlaw")
    sim.add_argument("--cells", help="cell grid lo:hi:n per axis for green")
    sim.add_argument("--horizon", type=float)
    sim.add_argument("--no-refine", action="store_true", help="skip the dt/2 rerun for exit times")
    _common(sim)

    ver = subs.add_parser("verify", help="run identity and ratio suites")
    ver.add_argument("--suite", default="all", help="all, identities, envelopes or a check name")
    ver.add_argument("--outdir", default="reports")
    _common(ver)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    handler = {"eval": cmd_eval, "simulate": cmd_simulate, "verify": cmd_verify}[args.command]
    try:
        return handler(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
