"""Command-line front end.

    lubricav run --case sinusoidal_1d --mode steady --out results/
    lubricav run --config my.cfg --set steps=3000 --out results/
    lubricav validate my.cfg
    lubricav cases list

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O failure.
Set ``LUBRICAV_LOG`` (``DEBUG``, ``INFO``, ``WARNING``...) for log output.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cases import BenchmarkId
from .config import ConfigError, apply_overrides, build_case, case_to_text, parse_text, read_file, shipped_config
from .simulation import NonStationary, Simulation, SolverFailure, boundary_pressure_trace

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

CASE_DESCRIPTIONS = {
    BenchmarkId.SINUSOIDAL_1D: "sinusoidal slider bearing on (-l/2, l/2), 1000 cells, steady (SI)",
    BenchmarkId.SQUEEZE_1D: "oscillating squeeze film on (0, 1), 450 cells, 3000 steps (dimensionless)",
    BenchmarkId.SINUSOIDAL_2D: "sinusoidal bearing on a square, 100x100 quads, 1 MPa boundary (SI)",
}
DEFAULT_MODE = {
    BenchmarkId.SINUSOIDAL_1D: "steady",
    BenchmarkId.SQUEEZE_1D: "transient",
    BenchmarkId.SINUSOIDAL_2D: "steady",
}

log = logging.getLogger("lubricav")


def _fmt(x):
    return "%.17g" % x


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _setup_logging():
    level = os.environ.get("LUBRICAV_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _load_raw(args):
    if args.case and args.config:
        raise ConfigError("give either --case or --config, not both")
    if args.case:
        try:
            bench = BenchmarkId(args.case)
        except ValueError:
            raise ConfigError(f"unknown case {args.case!r}; see 'lubricav cases list'") from None
        return read_file(shipped_config(bench.value)), bench
    if args.config:
        return read_file(args.config), None
    raise ConfigError("one of --case or --config is required")


def _resolve(args):
    raw, bench = _load_raw(args)
    overrides = list(args.set or [])
    if getattr(args, "family", None):
        overrides.append(f"case.family={args.family}")
    raw = apply_overrides(raw, overrides)
    return build_case(raw), bench


def cmd_run(args) -> int:
    t_start = time.perf_counter()
    try:
        case, bench = _resolve(args)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    mode = args.mode or (DEFAULT_MODE[bench] if bench else "transient")

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    timings = {"setup": 0.0, "solve": 0.0, "write": 0.0}
    t0 = time.perf_counter()
    sim = Simulation(case)
    timings["setup"] = time.perf_counter() - t0

    diags = []
    extents = []
    status = "ok"
    message = ""
    t0 = time.perf_counter()
    state = None
    try:
        if mode == "transient":
            n = case.n_steps if args.max_steps is None else min(case.n_steps, args.max_steps)
            state = sim.initial_state()
            for _ in range(n):
                state, d = sim.step(state)
                diags.append(d)
                extents.append(d.extent)
        else:
            res = sim.run_to_steady(max_steps=args.max_steps, strict=True, callback=lambda s, d: diags.append(d))
            state = res.state
    except SolverFailure as exc:
        status, message, state = "solver_failure", str(exc), exc.last_state
    except NonStationary as exc:
        status, message, state = "non_stationary", str(exc), exc.result.state
    timings["solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    files = []
    try:
        pts = sim.points
        axes = ["x", "y"][: sim.mesh.dim]
        rows = [[_fmt(c) for c in p] + [_fmt(a), _fmt(b), _fmt(c)] for p, a, b, c in zip(pts, state.P, state.theta, state.Lam)]
        _write_csv(out / "fields.csv", axes + ["p", "theta", "lambda"], rows)
        files.append("fields.csv")

        _write_csv(
            out / "iters.csv",
            ["step", "t", "pdas_iterations", "active_count", "mass_balance_residual"],
            [[d.step, _fmt(d.t), d.iterations, d.active_count, _fmt(d.mass_balance)] for d in diags],
        )
        files.append("iters.csv")

        if mode == "transient":
            header = ["t"] + [f"{ax}_{side}" for ax in axes for side in ("left", "right")]
            ext_rows = []
            for d in diags:
                vals = ["nan"] * (2 * len(axes)) if d.extent is None else [_fmt(v) for lo_hi in d.extent for v in lo_hi]
                ext_rows.append([_fmt(d.t)] + vals)
            _write_csv(out / "extent.csv", header, ext_rows)
            files.append("extent.csv")

        if sim.last_system is not None and state.step > 0:
            facets, pw = boundary_pressure_trace(sim.last_system, state, sim.space)
            mid = sim.mesh.facet_midpoints[facets]
            _write_csv(out / "boundary.csv", ["facet"] + axes + ["p_weak"],
                       [[f] + [_fmt(c) for c in m] + [_fmt(p)] for f, m, p in zip(facets, mid, pw)])
            files.append("boundary.csv")

        (out / "config.cfg").write_text(case_to_text(case))
        files.append("config.cfg")
        timings["write"] = time.perf_counter() - t0
        manifest = {
            "case": case.name,
            "mode": mode,
            "status": status,
            "message": message,
            "version": __version__,
            "steps": len(diags),
            "config": parse_text(case_to_text(case)).values,
            "timings_s": timings,
            "total_s": time.perf_counter() - t_start,
            "files": {f: _sha256(out / f) for f in files},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"error: writing results to {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    if status != "ok":
        print(f"error: {message}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"{case.name}: {mode} run finished after {len(diags)} steps; results in {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        raw = read_file(args.config)
        if args.set:
            raw = apply_overrides(raw, args.set)
        build_case(raw)
    except ConfigError as exc:
        for msg in exc.messages:
            print(msg)
        return EXIT_CONFIG
    print("OK")
    return EXIT_OK


def cmd_cases(args) -> int:
    for bench in BenchmarkId:
        print(f"{bench.value:15s} {CASE_DESCRIPTIONS[bench]}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lubricav", description="Transient cavitating thin-film lubrication solver")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark case or a config file")
    r.add_argument("--case", help="benchmark name (see 'cases list')")
    r.add_argument("--config", help="path to a config file")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value (repeatable)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--mode", choices=("transient", "steady"))
    r.add_argument("--family", choices=("rt0", "th"))
    r.add_argument("--max-steps", type=int, dest="max_steps")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("config")
    v.add_argument("--set", action="append", metavar="KEY=VALUE")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("cases", help="benchmark catalogue")
    c.add_argument("action", choices=("list",))
    c.set_defaults(func=cmd_cases)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
