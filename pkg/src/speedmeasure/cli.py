"""Command-line interface.

Exit codes: 0 success; 1 invalid input data (schema or measure invariants,
inconsistent paths), with a JSON error object on stderr; 2 usage errors
(bad flags, unreadable files).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path as FsPath

import jsonschema
import numpy as np

from .classify import classify
from .converge import EstimatorConfig, SimConfig, converse_experiment, speed_sense_check, stone_forward
from .estimate import estimate_interior
from .green import GreenKind, green
from .measures import SpeedMeasure, validate
from .paths import exit_stats
from .simulate import ChainSimulator, Path, PathEnsemble, TimeChangeSimulator

_NUM_OR_INF = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "+inf"]}]}

MEASURE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["interval", "pieces"],
    "properties": {
        "interval": {
            "type": "object",
            "required": ["left", "right", "left_closed", "right_closed"],
            "properties": {
                "left": _NUM_OR_INF,
                "right": _NUM_OR_INF,
                "left_closed": {"type": "boolean"},
                "right_closed": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "pieces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "coeffs"],
                "properties": {
                    "from": _NUM_OR_INF,
                    "to": _NUM_OR_INF,
                    "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "kind": {"enum": ["constant", "polynomial", "power"]},
                    "exponent": {"type": "number"},
                    "anchor": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
        "atoms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["at", "weight"],
                "properties": {"at": {"type": "number"}, "weight": {"type": "number"}},
                "additionalProperties": False,
            },
        },
        "left_boundary_weight": _NUM_OR_INF,
        "right_boundary_weight": _NUM_OR_INF,
        "stderr_per_cell": {"type": "array", "items": {"type": "number"}},
        "seed": {"type": "integer"},
        "paths_per_node": {"type": "integer"},
    },
    "additionalProperties": False,
}


class UsageError(Exception):
    """Bad invocation (exit 2)."""


class InputError(Exception):
    """Input data rejected (exit 1); ``payload`` is written to stderr as JSON."""

    def __init__(self, payload: dict):
        super().__init__(payload.get("error", "invalid input"))
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": "usage", "message": message}) + "\n")
        raise SystemExit(2)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(args, text: str, path: str | None = None) -> None:
    target = path if path is not None else args.out
    if target is None or target == "-":
        sys.stdout.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)


def _read_text(path: str) -> str:
    try:
        return FsPath(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_measure(path: str) -> SpeedMeasure:
    """Parse and schema-check a measure file; invariants are not checked here."""
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError({"error": "json", "file": path, "message": str(exc)}) from None
    errors = sorted(jsonschema.Draft202012Validator(MEASURE_SCHEMA).iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise InputError({
            "error": "schema",
            "file": path,
            "violations": [
                {"pointer": "/" + "/".join(str(p) for p in e.absolute_path), "message": e.message} for e in errors
            ],
        })
    try:
        return SpeedMeasure.from_dict(data)
    except (ValueError, TypeError) as exc:
        raise InputError({"error": "measure", "file": path, "message": str(exc)}) from None


def _require_valid(m: SpeedMeasure, path: str) -> None:
    bad = validate(m)
    if bad:
        raise InputError({"error": "invalid_measure", "file": path, "violations": [v.to_dict() for v in bad]})


def _pair(text: str | None, name: str):
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--{name} expects two comma-separated numbers")
    vals = []
    for p in parts:
        p = p.strip().lower()
        vals.append(None if p in ("", "none") else float(p))
    return tuple(vals)


# -- subcommands ------------------------------------------------------------------


def cmd_validate(args) -> int:
    m = load_measure(args.measure)
    bad = [v.to_dict() for v in validate(m)]
    if bad:
        sys.stderr.write(json.dumps({"error": "invalid_measure", "file": args.measure, "violations": _jsonable(bad)}) + "\n")
        _write(args, _dumps(bad))
        return 1
    _write(args, "[]\n")
    return 0


def cmd_green(args) -> int:
    try:
        kind = GreenKind(args.kind, args.a, args.b)
        value = green(kind, args.x, args.y)
    except ValueError as exc:
        raise InputError({"error": "domain", "message": str(exc)}) from None
    if args.format == "csv":
        _write(args, f"value\n{value!r}\n")
    else:
        _write(args, _dumps({"value": value}))
    return 0


def _paths_csv(ens: PathEnsemble) -> str:
    buf = io.StringIO()
    buf.write("path_id,t,x\n")
    for i, p in enumerate(ens):
        for t, x in zip(p.times.tolist(), p.values.tolist()):
            buf.write(f"{i},{t!r},{x!r}\n")
    return buf.getvalue()


def _ensemble_meta(ens: PathEnsemble) -> dict:
    return {
        "seed": ens.master_seed,
        "engine": ens.engine,
        "measure_digest": ens.measure_digest,
        "horizon": ens.horizon,
        "x0": ens.x0,
        "n_paths": len(ens),
        "params": ens.params,
        "status_counts": ens.status_counts(),
        "path_seeds": [p.seed for p in ens],
    }


def cmd_simulate(args) -> int:
    m = load_measure(args.measure)
    _require_valid(m, args.measure)
    horizon = float(args.horizon)
    stop = _pair(args.stop_window, "stop-window")
    window = _pair(args.window, "window")
    try:
        if args.engine == "chain":
            if args.grid_h is None:
                raise UsageError("--grid-h is required for the chain engine")
            sim = ChainSimulator(m, args.grid_h, window=window)
            ens = sim.simulate(args.x0, horizon, args.paths, args.seed, stop_window=stop, n_out=args.n_out,
                               threads=args.threads)
        else:
            if args.dt is None or args.bin is None:
                raise UsageError("--dt and --bin are required for the timechange engine")
            sim = TimeChangeSimulator(m, args.dt, args.bin, window=window)
            ens = sim.simulate(args.x0, horizon, args.paths, args.seed, stop_window=stop,
                               n_out=args.n_out or 1024, threads=args.threads)
    except ValueError as exc:
        raise InputError({"error": "simulation", "message": str(exc)}) from None
    if args.format == "json":
        body = _ensemble_meta(ens)
        body["paths"] = [{"t": p.times, "x": p.values, "status": p.status} for p in ens]
        _write(args, _dumps(body))
    else:
        _write(args, _paths_csv(ens))
        if args.out not in (None, "-"):
            _write(args, _dumps(_ensemble_meta(ens)), args.out + ".meta.json")
    return 0


def read_paths_csv(path: str) -> list[Path]:
    text = _read_text(path)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["path_id", "t", "x"]:
        raise InputError({"error": "paths_csv", "file": path, "message": "header must be path_id,t,x"})
    rows: dict[int, tuple[list, list]] = {}
    order = []
    for lineno, row in enumerate(reader, start=2):
        try:
            pid, t, x = int(row[0]), float(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise InputError({"error": "paths_csv", "file": path, "line": lineno, "message": "malformed row"}) from None
        if pid not in rows:
            rows[pid] = ([], [])
            order.append(pid)
        rows[pid][0].append(t)
        rows[pid][1].append(x)
    out = []
    for pid in order:
        ts, xs = rows[pid]
        if any(b < a for a, b in zip(ts[:-1], ts[1:])):
            raise InputError({"error": "paths_csv", "file": path, "path_id": pid, "message": "times not monotone"})
        out.append(Path(np.asarray(ts), np.asarray(xs), 0))
    return out


def cmd_exit_stats(args) -> int:
    paths = read_paths_csv(args.paths)
    if not paths:
        raise InputError({"error": "paths_csv", "file": args.paths, "message": "no paths"})
    tol = 1e-9 * max(1.0, abs(args.x0))
    for i, p in enumerate(paths):
        if abs(p.values[0] - args.x0) > tol:
            raise InputError({"error": "start_mismatch", "path_id": i, "message": f"path starts at {p.values[0]!r}, not x0"})
    horizon = max(float(p.times[-1]) for p in paths)
    ens = PathEnsemble(tuple(paths), "", "file", 0, horizon, args.x0)
    try:
        st = exit_stats(ens, args.a, args.b, args.x0)
    except ValueError as exc:
        raise InputError({"error": "window", "message": str(exc)}) from None
    d = st.to_dict()
    if args.format == "csv":
        keys = sorted(k for k in d if k != "window")
        _write(args, ",".join(keys) + "\n" + ",".join(repr(_jsonable(d[k])) if isinstance(d[k], float) else str(d[k]) for k in keys) + "\n")
    else:
        _write(args, _dumps(d))
    return 0


def cmd_estimate(args) -> int:
    if args.engine != "chain":
        raise UsageError("estimate supports --engine chain")
    m = load_measure(args.measure)
    _require_valid(m, args.measure)
    k = int(round((args.grid_to - args.grid_from) / args.grid_h))
    if k < 2:
        raise UsageError("grid needs at least three nodes")
    grid = np.linspace(args.grid_from, args.grid_to, k + 1)
    window = _pair(args.window, "window")
    try:
        sim = ChainSimulator(m, args.sim_h, window=window, extra_nodes=tuple(grid))
        est = estimate_interior(sim, grid, args.paths_per_node, args.seed, threads=args.threads)
    except ValueError as exc:
        raise InputError({"error": "estimate", "message": str(exc)}) from None
    _write(args, _dumps(est.to_dict()))
    return 0


def cmd_classify(args) -> int:
    m = load_measure(args.measure)
    out = classify(m)
    _write(args, _dumps(out))
    return 0


def _curves_csv(report) -> str:
    buf = io.StringIO()
    buf.write("n,distance,family\n")
    for n, d, fam in report.curves():
        buf.write(f"{_jsonable(n)!r},{float(d)!r},{fam}\n")
    return buf.getvalue()


def cmd_converge(args) -> int:
    files = [f for f in args.measures.split(",") if f]
    if not files:
        raise UsageError("--measures needs at least one file")
    ms = [load_measure(f) for f in files]
    m0 = load_measure(args.limit)
    for f, m in zip(files + [args.limit], ms + [m0]):
        _require_valid(m, f)
    if args.indices:
        indices = [float(x) if "." in x or "e" in x else int(x) for x in args.indices.split(",")]
    else:
        indices = list(range(1, len(ms) + 1))
    window = _pair(args.window, "window")
    try:
        if args.mode == "speed":
            rep = speed_sense_check(ms, m0, args.tol if args.tol is not None else 0.05, indices)
        elif args.mode == "stone":
            if args.x0 is None:
                raise UsageError("--x0 is required for --mode stone")
            cfg = SimConfig(engine=args.engine, h=args.grid_h, dt=args.dt, bin=args.bin, n_paths=args.paths,
                            horizon=args.horizon, window=window, seed=args.seed, threads=args.threads)
            rep = stone_forward(ms, m0, args.x0, cfg, indices)
        else:
            if args.grid_from is None or args.grid_to is None:
                raise UsageError("--grid-from and --grid-to are required for --mode converse")
            k = int(round((args.grid_to - args.grid_from) / args.est_grid_h))
            grid = tuple(np.linspace(args.grid_from, args.grid_to, k + 1).tolist())
            boundary = {}
            for item in args.boundary or []:
                side, _, b = item.partition(":")
                if side not in ("left", "right") or not b:
                    raise UsageError("--boundary expects side:b, e.g. left:1.0")
                boundary[side] = float(b)
            cfg = EstimatorConfig(grid=grid, h=args.grid_h, n_per_node=args.paths_per_node, seed=args.seed,
                                  threads=args.threads, window=window, boundary=boundary)
            rep = converse_experiment(ms, m0, cfg, args.tol if args.tol is not None else 0.1, indices)
    except ValueError as exc:
        raise InputError({"error": "converge", "message": str(exc)}) from None
    body = rep.to_dict(include_runtime=args.include_runtime)
    body["seed"] = args.seed
    if args.format == "csv":
        _write(args, _curves_csv(rep))
    else:
        _write(args, _dumps(body))
    if args.curves:
        _write(args, _curves_csv(rep), args.curves)
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (all streams derive from it)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="output format where applicable")

    p = _Parser(prog="speedmeasure", description="Natural-scale diffusions from speed measures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="check speed-measure invariants")
    s.add_argument("--measure", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("green", parents=[common], help="Green function value")
    s.add_argument("--kind", choices=("open", "left", "right"), required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--y", type=float, required=True)
    s.set_defaults(func=cmd_green)

    s = sub.add_parser("simulate", parents=[common], help="simulate paths to CSV")
    s.add_argument("--measure", required=True)
    s.add_argument("--engine", choices=("chain", "timechange"), default="chain")
    s.add_argument("--x0", type=float, required=True)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--paths", type=int, required=True)
    s.add_argument("--grid-h", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--bin", type=float)
    s.add_argument("--stop-window", help="a,b: stop each path on leaving (a, b); either side may be 'none'")
    s.add_argument("--window", help="lo,hi: simulation range (needed for unbounded J)")
    s.add_argument("--n-out", type=int, help="record on this many equally spaced times")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("exit-stats", parents=[common], help="exit statistics of a paths CSV")
    s.add_argument("--paths", required=True)
    s.add_argument("--a", type=float, default=None, help="lower exit level (omit for a reflected window)")
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--x0", type=float, required=True)
    s.set_defaults(func=cmd_exit_stats)

    s = sub.add_parser("estimate", parents=[common], help="estimate a speed measure from simulated exits")
    s.add_argument("--measure", required=True)
    s.add_argument("--engine", default="chain")
    s.add_argument("--grid-from", type=float, required=True)
    s.add_argument("--grid-to", type=float, required=True)
    s.add_argument("--grid-h", type=float, required=True)
    s.add_argument("--paths-per-node", type=int, required=True)
    s.add_argument("--sim-h", type=float, default=0.01, help="spacing of the simulating chain")
    s.add_argument("--window", help="lo,hi: simulation range (needed for unbounded J)")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("classify", parents=[common], help="boundary and regularity predicates")
    s.add_argument("--measure", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("converge", parents=[common], help="convergence experiments")
    s.add_argument("--mode", choices=("speed", "stone", "converse"), required=True)
    s.add_argument("--measures", required=True, help="comma-separated measure files m^1,...,m^K")
    s.add_argument("--limit", required=True)
    s.add_argument("--indices", help="comma-separated indices n (default 1..K)")
    s.add_argument("--x0", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--engine", choices=("chain", "timechange"), default="chain")
    s.add_argument("--paths", type=int, default=10_000)
    s.add_argument("--horizon", type=float, default=1.0)
    s.add_argument("--grid-h", type=float, default=0.01)
    s.add_argument("--dt", type=float, default=1e-5)
    s.add_argument("--bin", type=float, default=0.01)
    s.add_argument("--window", help="lo,hi: simulation range")
    s.add_argument("--grid-from", type=float)
    s.add_argument("--grid-to", type=float)
    s.add_argument("--est-grid-h", type=float, default=0.05)
    s.add_argument("--paths-per-node", type=int, default=10_000)
    s.add_argument("--boundary", action="append", help="side:b for a boundary-weight estimate (repeatable)")
    s.add_argument("--curves", help="also write n,distance,family rows to this CSV")
    s.add_argument("--include-runtime", action="store_true", help="add wall-clock runtime (breaks byte-identity)")
    s.set_defaults(func=cmd_converge)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": "usage", "message": str(exc)}) + "\n")
        return 2
    except InputError as exc:
        sys.stderr.write(json.dumps(_jsonable(exc.payload)) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
