"""Compiled vs pure-Python kernel timings.

Both backends produce bit-identical ensembles; this script checks that on
every workload before reporting wall-clock times and the speedup.

Usage: ``python benchmarks/bench_kernels.py [--paths N] [--repeat R]``
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from speedmeasure import Atom, SpeedMeasure
from speedmeasure._kernels import available_backends
from speedmeasure.fixtures import UNIT
from speedmeasure.simulate import build_grid_chain, run_chain, run_timechange


def workloads(n_paths: int) -> dict:
    m = SpeedMeasure.lebesgue(UNIT, 2.0).with_atoms(Atom(0.5, 1.0))
    chain = build_grid_chain(m, 0.01)
    return {
        "chain_exit": lambda b: run_chain(chain, 0.3, np.inf, n_paths, 1, stop_window=(0.0, 1.0), backend=b),
        "chain_grid": lambda b: run_chain(chain, 0.5, 1.0, n_paths, 2, n_out=257, backend=b),
        "timechange_exit": lambda b: run_timechange(m, 0.5, np.inf, max(n_paths // 10, 1), 1e-5, 0.01, 3,
                                                    stop_window=(0.2, 0.8), backend=b),
    }


def _best(fn, backend: str, repeat: int):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(e1, e2) -> bool:
    return all(np.array_equal(p.times, q.times) and np.array_equal(p.values, q.values) for p, q in zip(e1, e2))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "compiled" not in available_backends():
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    rows = []
    for name, fn in workloads(args.paths).items():
        tc, ec = _best(fn, "compiled", args.repeat)
        tp, ep = _best(fn, "python", 1)
        rows.append({"workload": name, "paths": len(ec), "compiled_s": round(tc, 4), "python_s": round(tp, 4),
                     "speedup": round(tp / tc, 1), "identical": _same(ec, ep)})
    for r in rows:
        print(json.dumps(r))


if __name__ == "__main__":
    main()
