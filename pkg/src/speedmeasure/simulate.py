"""Path simulation: a birth-death grid chain and a time change of Brownian motion.

Both engines draw every path from its own PCG64 stream seeded by
:func:`path_seed`, so an ensemble depends only on its inputs and the master
seed, never on the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import (
    EDGE_ABSORB,
    EDGE_ESCAPE,
    EDGE_REFLECT,
    ST_ABSORBED,
    ST_ESCAPED,
    get_backend,
)
from .green import GreenKind, expected_exit_time
from .measures import SpeedMeasure, density_mass, validate

__all__ = [
    "BirthDeathChain",
    "Path",
    "PathEnsemble",
    "build_grid_chain",
    "run_chain",
    "run_timechange",
    "path_seed",
    "ChainSimulator",
    "TimeChangeSimulator",
    "STATUS_NAMES",
]

STATUS_NAMES = ("horizon", "exit", "absorbed", "escaped")
SNAP_TOL = 1e-9


def path_seed(master_seed: int, index: int) -> int:
    """64-bit seed of path ``index``: a spawned child of the master seed sequence."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class BirthDeathChain:
    """Continuous-time nearest-neighbour chain on ``nodes``.

    ``tags`` gives the kind of the first and last node: ``reflecting``,
    ``absorbing`` or ``truncated`` (an artificial window edge inside J, where
    the path is stopped and flagged as escaped).
    """

    nodes: np.ndarray
    up_prob: np.ndarray
    mean_holding: np.ndarray
    tags: tuple
    measure_digest: str = ""

    def __post_init__(self):
        for name in ("nodes", "up_prob", "mean_holding"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.nodes.size

    def node_index(self, x: float) -> int:
        """Index of the node nearest ``x``; error when ``x`` is outside the node range."""
        lo, hi = self.nodes[0], self.nodes[-1]
        tol = SNAP_TOL * max(1.0, hi - lo)
        if x < lo - tol or x > hi + tol:
            raise ValueError(f"x0 = {x} outside the node range [{lo}, {hi}]")
        i = int(np.searchsorted(self.nodes, x))
        if i == self.nodes.size:
            return i - 1
        if i > 0 and x - self.nodes[i - 1] <= self.nodes[i] - x:
            return i - 1
        return i


def _node_grid(lo: float, hi: float, h: float) -> np.ndarray:
    span = hi - lo
    k = round(span / h)
    if k >= 1 and abs(k * h - span) <= SNAP_TOL * span:
        return np.linspace(lo, hi, k + 1)
    pts = lo + h * np.arange(int(math.floor(span / h)) + 1)
    if hi - pts[-1] > SNAP_TOL * span:
        pts = np.append(pts, hi)
    else:
        pts[-1] = hi
    return pts


def _merge_nodes(base: np.ndarray, extra) -> np.ndarray:
    lo, hi = base[0], base[-1]
    tol = SNAP_TOL * max(1.0, hi - lo)
    pts = list(base)
    for x in extra:
        if x is None or not math.isfinite(x) or x < lo - tol or x > hi + tol:
            continue
        i = int(np.searchsorted(base, x))
        near = [base[k] for k in (i - 1, i) if 0 <= k < base.size]
        if all(abs(x - y) > tol for y in near):
            pts.append(float(x))
    return np.unique(np.asarray(pts, dtype=float))


def _simulation_window(m: SpeedMeasure, window) -> tuple[float, float]:
    J = m.interval
    if window is None:
        lo, hi = J.left, J.right
    else:
        lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"a finite simulation window is required on {J}")
    if not lo < hi or lo < J.left or hi > J.right:
        raise ValueError(f"window [{lo}, {hi}] not inside {J}")
    if (lo == J.left and not J.left_closed) or (hi == J.right and not J.right_closed):
        raise ValueError("window reaches an open endpoint, which the diffusion never attains")
    return lo, hi


def build_grid_chain(
    m: SpeedMeasure,
    h: float | None = None,
    nodes=None,
    window=None,
    extra_nodes=(),
    check: bool = True,
) -> BirthDeathChain:
    """Grid chain whose jump law and mean holding times are exact for ``m``.

    Parameters
    ----------
    m : SpeedMeasure
    h : float, optional
        Grid spacing; the last cell is shortened to end on the window edge.
    nodes : array_like, optional
        Explicit sorted nodes (instead of ``h``).
    window : (float, float), optional
        Node range; defaults to the state interval, which must then be closed
        and bounded.  Edges strictly inside J are tagged ``truncated``.
    extra_nodes : iterable of float
        Levels that must be nodes (start point, exit levels, atoms).
    """
    if check:
        bad = validate(m)
        if bad:
            raise ValueError(f"invalid speed measure: {bad[0].message}")
    if nodes is None:
        if h is None or not h > 0:
            raise ValueError("grid spacing h must be positive")
        lo, hi = _simulation_window(m, window)
        x = _merge_nodes(_node_grid(lo, hi, float(h)), extra_nodes)
    else:
        x = np.unique(np.asarray(nodes, dtype=float))
        lo, hi = _simulation_window(m, (x[0], x[-1]))
        x = _merge_nodes(x, extra_nodes)
    if x.size < 3:
        raise ValueError("a chain needs at least three nodes")
    J = m.interval
    n = x.size
    up = np.empty(n)
    hold = np.empty(n)
    up[1:-1] = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
    for i in range(1, n - 1):
        hold[i] = expected_exit_time(m, GreenKind.open(x[i - 1], x[i + 1]), x[i])
    tags = []
    for side, k, nb in (("left", 0, 1), ("right", n - 1, n - 2)):
        edge = J.left if side == "left" else J.right
        closed = J.left_closed if side == "left" else J.right_closed
        if x[k] == edge and closed:
            w = m.boundary_weight(side)
            if math.isinf(w):
                tags.append("absorbing")
                hold[k] = math.inf
                up[k] = 0.5
            else:
                tags.append("reflecting")
                kind = GreenKind.left_reflected(x[0], x[1]) if side == "left" else GreenKind.right_reflected(x[-2], x[-1])
                hold[k] = expected_exit_time(m, kind, x[k])
                up[k] = 1.0 if side == "left" else 0.0
        else:
            tags.append("truncated")
            hold[k] = math.inf
            up[k] = 0.5
    return BirthDeathChain(x, up, hold, tuple(tags), m.digest())


@dataclass(frozen=True)
class Path:
    """One sample path: values at increasing times, with its stream seed."""

    times: np.ndarray
    values: np.ndarray
    seed: int
    status: str = "horizon"

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class PathEnsemble:
    """Paths from one engine, measure and master seed, ordered by path index."""

    paths: tuple
    measure_digest: str
    engine: str
    master_seed: int
    horizon: float
    x0: float
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def status_counts(self) -> dict:
        out = {s: 0 for s in STATUS_NAMES}
        for p in self.paths:
            out[p.status] += 1
        return out

    def final_values(self) -> np.ndarray:
        return np.array([p.values[-1] for p in self.paths])


def _run_parallel(fn, n: int, threads: int) -> list:
    if threads <= 1 or n < 2:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(n), chunksize=max(1, n // (8 * threads))))


def _output_grid(horizon: float, n_out: int | None) -> np.ndarray:
    if math.isinf(horizon):
        return np.zeros(1)
    if n_out is None or n_out < 2:
        raise ValueError("n_out must be at least 2 for a finite horizon")
    return np.linspace(0.0, horizon, int(n_out))


def _check_run_args(horizon: float, n_paths: int, stop_window) -> None:
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if math.isinf(horizon) and stop_window is None:
        raise ValueError("an infinite horizon needs a stop window")
    if n_paths < 0:
        raise ValueError("n_paths must be nonnegative")


def _stop_levels(stop_window) -> tuple[float, float]:
    if stop_window is None:
        return -math.inf, math.inf
    a, b = stop_window
    a = -math.inf if a is None else float(a)
    b = math.inf if b is None else float(b)
    if not a < b:
        raise ValueError("stop window needs a < b")
    return a, b


def run_chain(
    chain: BirthDeathChain,
    x0: float,
    horizon: float,
    n_paths: int,
    master_seed: int,
    stop_window=None,
    n_out: int | None = None,
    threads: int = 1,
    backend: str | None = None,
) -> PathEnsemble:
    """Event-driven simulation of the chain from the node nearest ``x0``.

    Parameters
    ----------
    stop_window : (a, b), optional
        Stop each path at its first visit to a node ``<= a`` or ``>= b``; the
        exit event is the last point of the path.  Either side may be None.
    n_out : int, optional
        Record the path on ``n_out`` equally spaced times in ``[0, horizon]``
        (plus the exit event) instead of at every jump.
    """
    _check_run_args(horizon, n_paths, stop_window)
    kern = get_backend(backend)
    start = chain.node_index(x0)
    a, b = _stop_levels(stop_window)
    nodes = chain.nodes
    stop_lo = int(np.searchsorted(nodes, a + SNAP_TOL * max(1.0, abs(a)), side="right")) - 1 if math.isfinite(a) else -1
    stop_hi = int(np.searchsorted(nodes, b - SNAP_TOL * max(1.0, abs(b)), side="left")) if math.isfinite(b) else nodes.size
    record_all = n_out is None and math.isfinite(horizon)
    grid = np.zeros(0) if record_all else _output_grid(horizon, n_out)
    truncated = {0: chain.tags[0] == "truncated", nodes.size - 1: chain.tags[1] == "truncated"}

    def one(i: int) -> Path:
        seed = path_seed(master_seed, i)
        ts, ix, status = kern.chain_path(
            chain.mean_holding, chain.up_prob, start, float(horizon), stop_lo, stop_hi,
            grid, record_all, np.random.PCG64(seed),
        )
        idx = ix.astype(np.int64)
        if status == ST_ABSORBED and truncated.get(int(idx[-1]), False):
            status = ST_ESCAPED
        return Path(ts, nodes[idx], seed, STATUS_NAMES[status])

    paths = tuple(_run_parallel(one, n_paths, threads))
    params = {
        "h_min": float(np.min(np.diff(nodes))),
        "h_max": float(np.max(np.diff(nodes))),
        "n_nodes": int(nodes.size),
        "x0_requested": float(x0),
        "x0_snapped": float(nodes[start]),
        "stop_window": [a, b],
        "n_out": n_out,
        "tags": list(chain.tags),
    }
    return PathEnsemble(paths, chain.measure_digest, "chain", int(master_seed), float(horizon), float(nodes[start]), params)


def _edge(m: SpeedMeasure, side: str, edge: float, bw: float) -> tuple[int, float]:
    J = m.interval
    at_boundary = edge == (J.left if side == "left" else J.right)
    closed = J.left_closed if side == "left" else J.right_closed
    if at_boundary and closed:
        w = m.boundary_weight(side)
        if math.isinf(w):
            return EDGE_ABSORB, 0.0
        return EDGE_REFLECT, w / bw
    return EDGE_ESCAPE, 0.0


def _driver_window(m: SpeedMeasure, x0: float, horizon: float, window, stop) -> tuple[float, float]:
    J = m.interval
    if window is not None:
        lo, hi = float(window[0]), float(window[1])
    else:
        reach = 10.0 * max(1.0, math.sqrt(horizon)) if math.isfinite(horizon) else math.inf
        lo = J.left if J.left_closed else max(stop[0], x0 - reach)
        hi = J.right if J.right_closed else min(stop[1], x0 + reach)
        if not J.left_closed and math.isfinite(J.left) and lo <= J.left:
            raise ValueError("a window (or stop window) is needed next to a finite open endpoint")
        if not J.right_closed and math.isfinite(J.right) and hi >= J.right:
            raise ValueError("a window (or stop window) is needed next to a finite open endpoint")
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError("driver window must be finite; pass window or a stop window")
    if lo < J.left or hi > J.right:
        raise ValueError(f"window [{lo}, {hi}] not inside {J}")
    return lo, hi


def run_timechange(
    m: SpeedMeasure,
    x0: float,
    horizon: float,
    n_paths: int,
    dt: float,
    bin: float,
    master_seed: int,
    stop_window=None,
    n_out: int | None = 1024,
    window=None,
    threads: int = 1,
    backend: str | None = None,
    check: bool = True,
) -> PathEnsemble:
    """Time change ``X = B(S)`` of a Brownian driver ``B`` with step ``dt``.

    The clock ``T`` grows by ``L(bin) * m(bin)`` per driver step, where the
    local-time increment is read from occupation with density ``2 L``
    (so ``m = 2 * Lebesgue`` gives ``T_t = t``).  An atom of weight ``w``
    adds ``w * dt / (2 * bin)`` while the driver is within ``bin / 2`` of it,
    during which ``X`` sits exactly at the atom.  A finite boundary weight
    ``w`` adds ``w * dt / bin`` while the driver is in the half-bin next to the
    reflecting endpoint; an infinite one freezes ``X`` on arrival.

    Parameters
    ----------
    window : (lo, hi), optional
        Driver range.  Closed endpoints of J reflect or absorb; other edges
        stop the path with status ``escaped``.  Defaults to J, cut at the stop
        window or ``x0 -/+ 10 max(1, sqrt(horizon))`` on open sides.
    """
    _check_run_args(horizon, n_paths, stop_window)
    if not (dt > 0 and bin > 0):
        raise ValueError("dt and bin must be positive")
    if check:
        bad = validate(m)
        if bad:
            raise ValueError(f"invalid speed measure: {bad[0].message}")
    J = m.interval
    if not J.contains(x0):
        raise ValueError(f"x0 = {x0} not in {J}")
    kern = get_backend(backend)
    a, b = _stop_levels(stop_window)
    lo, hi = _driver_window(m, x0, horizon, window, (a, b))
    if not lo <= x0 <= hi:
        raise ValueError(f"x0 = {x0} outside the driver window [{lo}, {hi}]")
    nb = int(math.ceil((hi - lo) / bin - SNAP_TOL))
    edges = np.minimum(lo + bin * np.arange(nb + 1), hi)
    edges[-1] = hi
    widths = np.diff(edges)
    rate = np.ascontiguousarray(density_mass(m, edges) / (2.0 * widths))
    atoms = [at for at in m.atoms if lo < at.at < hi]
    atom_at = np.array([at.at for at in atoms], dtype=float)
    atom_rate = np.array([at.weight / (2.0 * bin) for at in atoms], dtype=float)
    lo_kind, lo_rate = _edge(m, "left", lo, bin)
    hi_kind, hi_rate = _edge(m, "right", hi, bin)
    grid = _output_grid(horizon, n_out)

    def one(i: int) -> Path:
        seed = path_seed(master_seed, i)
        ts, xs, status = kern.timechange_path(
            float(x0), float(horizon), float(dt), lo, float(bin), rate, atom_at, atom_rate,
            lo, lo_kind, lo_rate, hi, hi_kind, hi_rate, a, b, grid, np.random.PCG64(seed),
        )
        return Path(ts, xs, seed, STATUS_NAMES[status])

    paths = tuple(_run_parallel(one, n_paths, threads))
    params = {"dt": float(dt), "bin": float(bin), "window": [lo, hi], "stop_window": [a, b], "n_out": n_out}
    return PathEnsemble(paths, m.digest(), "timechange", int(master_seed), float(horizon), float(x0), params)


class ChainSimulator:
    """Engine handle: grid chain of spacing ``h`` with start and exit levels added as nodes."""

    engine = "chain"

    def __init__(self, measure: SpeedMeasure, h: float = 0.01, window=None, backend: str | None = None,
                 extra_nodes=()):
        self.measure = measure
        self.h = float(h)
        self.window = window
        self.backend = backend
        self.extra_nodes = tuple(float(x) for x in extra_nodes)
        self._cache: dict = {}
        validate_once = validate(measure)
        if validate_once:
            raise ValueError(f"invalid speed measure: {validate_once[0].message}")

    def chain(self, *levels) -> BirthDeathChain:
        key = tuple(sorted({float(x) for x in levels + self.extra_nodes if x is not None and math.isfinite(x)}))
        if key not in self._cache:
            self._cache[key] = build_grid_chain(self.measure, self.h, window=self.window, extra_nodes=key, check=False)
        return self._cache[key]

    def simulate(self, x0, horizon, n_paths, seed, stop_window=None, n_out=None, threads=1) -> PathEnsemble:
        a, b = _stop_levels(stop_window)
        ch = self.chain(x0, a, b)
        return run_chain(ch, x0, horizon, n_paths, seed, stop_window, n_out, threads, self.backend)


class TimeChangeSimulator:
    """Engine handle for :func:`run_timechange` with fixed ``dt`` and ``bin``."""

    engine = "timechange"

    def __init__(self, measure: SpeedMeasure, dt: float = 1e-5, bin: float = 0.01, window=None,
                 backend: str | None = None):
        bad = validate(measure)
        if bad:
            raise ValueError(f"invalid speed measure: {bad[0].message}")
        self.measure = measure
        self.dt = float(dt)
        self.bin = float(bin)
        self.window = window
        self.backend = backend

    def simulate(self, x0, horizon, n_paths, seed, stop_window=None, n_out=1024, threads=1) -> PathEnsemble:
        return run_timechange(
            self.measure, x0, horizon, n_paths, self.dt, self.bin, seed, stop_window,
            n_out, self.window, threads, self.backend, check=False,
        )
