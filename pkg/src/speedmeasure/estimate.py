"""Recover a speed measure from simulated exit times.

Interior: on a grid ``y_0 < ... < y_k`` the exit time of ``(y_{i-1}, y_{i+1})``
from ``y_i`` has mean ``∫ G(y_i, y) m(dy)``.  Treating the mass near ``y_i`` as
concentrated at ``y_i`` gives the one-point collocation
``m(cell_i) ≈ E[exit] / G(y_i, y_i)``.

Boundary: from a reflecting endpoint ``l``, ``E_l[γ_b] = ∫ G_[l,b)(l, y) m(dy)``
and ``G_[l,b)(l, l) = b - l``, so the boundary weight is what remains of the
mean after subtracting the interior contribution, divided by ``b - l``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import DensityPiece, Interval, SpeedMeasure
from .paths import exit_stats, first_passage
from .simulate import path_seed

__all__ = [
    "InteriorEstimate",
    "BoundaryAtomEstimate",
    "BoundaryAbsorbingError",
    "estimate_interior",
    "estimate_boundary_atom",
    "detect_absorbing",
]


class BoundaryAbsorbingError(ValueError):
    """Raised when a boundary weight is requested for an absorbing endpoint."""


@dataclass(frozen=True)
class InteriorEstimate:
    """Piecewise-constant estimate, one cell per interior node.

    Cell ``i`` runs between the midpoints of ``[y_{i-1}, y_i]`` and
    ``[y_i, y_{i+1}]``, so the estimate covers ``[(y_0 + y_1)/2, (y_{k-1} + y_k)/2]``.
    """

    grid: np.ndarray
    cell_edges: np.ndarray
    cell_mass: np.ndarray
    cell_mass_se: np.ndarray
    exit_mean: np.ndarray
    exit_mean_se: np.ndarray
    censored: np.ndarray
    n_per_node: int
    seed: int

    @property
    def nodes(self) -> np.ndarray:
        return self.grid[1:-1]

    @property
    def cell_length(self) -> np.ndarray:
        return np.diff(self.cell_edges)

    @property
    def density(self) -> np.ndarray:
        return self.cell_mass / self.cell_length

    @property
    def density_se(self) -> np.ndarray:
        return self.cell_mass_se / self.cell_length

    @property
    def measure(self) -> SpeedMeasure:
        """The estimate as a speed measure on the closed cell range (zero end weights)."""
        e = self.cell_edges
        pieces = tuple(DensityPiece(e[i], e[i + 1], (max(float(d), 0.0),)) for i, d in enumerate(self.density))
        return SpeedMeasure(Interval.closed(float(e[0]), float(e[-1])), pieces, (), 0.0, 0.0)

    def cell_index(self, x: float) -> int:
        return int(np.clip(np.searchsorted(self.cell_edges, x, side="right") - 1, 0, self.cell_mass.size - 1))

    def to_dict(self) -> dict:
        d = self.measure.to_dict()
        d["stderr_per_cell"] = [float(s) for s in self.cell_mass_se]
        d["seed"] = int(self.seed)
        d["paths_per_node"] = int(self.n_per_node)
        return d


def _check_grid(grid) -> np.ndarray:
    y = np.asarray(grid, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("degenerate grid: need at least three nodes")
    if not np.all(np.isfinite(y)) or np.any(np.diff(y) <= 0):
        raise ValueError("degenerate grid: nodes must be finite and strictly increasing")
    return y


def estimate_interior(simulator, grid, n_per_node: int, seed: int, threads: int = 1,
                      horizon: float = math.inf) -> InteriorEstimate:
    """Cell masses from exit times of ``(y_{i-1}, y_{i+1})`` started at ``y_i``.

    Parameters
    ----------
    simulator
        Engine handle with a ``simulate(x0, horizon, n, seed, stop_window, ...)`` method.
    grid : array_like
        Nodes strictly inside the state interval.
    n_per_node : int
        Paths per interior node (at least 2).
    seed : int
        Master seed; node ``i`` uses the derived seed ``path_seed(seed, i)``.
    """
    y = _check_grid(grid)
    if n_per_node < 2:
        raise ValueError("insufficient samples: need at least 2 paths per node")
    J = simulator.measure.interval
    # the outer nodes are exit levels only, so closed endpoints are allowed
    if not (J.contains(y[0]) and J.contains(y[-1]) and all(J.in_interior(v) for v in y[1:-1])):
        raise ValueError(f"grid must lie in {J} with interior nodes inside its interior")
    k = y.size - 1
    mean = np.empty(k - 1)
    se = np.empty(k - 1)
    cens = np.zeros(k - 1, dtype=int)
    for i in range(1, k):
        ens = simulator.simulate(y[i], horizon, n_per_node, path_seed(seed, i),
                                 stop_window=(y[i - 1], y[i + 1]), threads=threads)
        st = exit_stats(ens, y[i - 1], y[i + 1], y[i])
        if st.n - st.censored_count < 2:
            raise ValueError(f"insufficient samples: node {y[i]} has fewer than 2 exits")
        mean[i - 1], se[i - 1], cens[i - 1] = st.mean_exit, st.mean_exit_se, st.censored_count
    g = (y[1:-1] - y[:-2]) * (y[2:] - y[1:-1]) / (y[2:] - y[:-2])
    edges = 0.5 * (y[1:] + y[:-1])
    return InteriorEstimate(y, edges, mean / g, se / g, mean, se, cens, int(n_per_node), int(seed))


@dataclass(frozen=True)
class BoundaryAtomEstimate:
    weight: float
    se: float
    raw: float
    exit_mean: float
    exit_mean_se: float
    interior_integral: float


def _side_geometry(m: SpeedMeasure, side: str, b: float) -> float:
    J = m.interval
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    closed = J.left_closed if side == "left" else J.right_closed
    if not closed:
        raise ValueError(f"{side} endpoint of {J} is not closed")
    e = J.left if side == "left" else J.right
    if not J.in_interior(b) or (side == "left" and b <= e) or (side == "right" and b >= e):
        raise ValueError(f"b = {b} must be an interior point on the inner side of {e}")
    return e


def detect_absorbing(simulator, side: str, b: float, t: float | None = None, n: int = 1000,
                     seed: int = 0, eps: float = 1e-3, threads: int = 1) -> bool:
    """True iff the empirical ``P_e(τ_b > t)`` from the endpoint ``e`` exceeds ``1 - eps``."""
    e = _side_geometry(simulator.measure, side, b)
    if t is None:
        t = 10.0 * (b - e) ** 2
    stop = (None, b) if side == "left" else (b, None)
    ens = simulator.simulate(e, t, n, seed, stop_window=stop, n_out=2, threads=threads)
    stuck = 0
    for p in ens:
        tt = _hit_time(p, side, b)
        if tt is None or tt > t:
            stuck += 1
    return stuck / max(n, 1) > 1.0 - eps


def _hit_time(path, side: str, b: float) -> float | None:
    return first_passage(path, b, "upper" if side == "left" else "lower")


def _interior_green_integral(interior: InteriorEstimate, e: float, b: float) -> tuple[float, float]:
    """``∫ |b - y| dm̂`` between ``e`` and ``b`` (and its standard error).

    The outermost cell's density is extended from the cell range to the endpoint.
    """
    edges = interior.cell_edges.copy()
    lo, hi = min(e, b), max(e, b)
    if lo < edges[0]:
        edges[0] = lo
    if hi > edges[-1]:
        edges[-1] = hi
    if hi > interior.cell_edges[-1] + 1e-12 and e < b:
        raise ValueError("interior estimate does not cover b")
    if lo < interior.cell_edges[0] - 1e-12 and e > b:
        raise ValueError("interior estimate does not cover b")
    dens = interior.density
    dse = interior.density_se
    total = 0.0
    var = 0.0
    for i in range(dens.size):
        u, v = max(edges[i], lo), min(edges[i + 1], hi)
        if not u < v:
            continue
        # ∫_u^v |b - y| dy
        w = 0.5 * (abs(b - u) + abs(b - v)) * (v - u)
        total += dens[i] * w
        var += (dse[i] * w) ** 2
    return total, math.sqrt(var)


def estimate_boundary_atom(simulator, side: str, b: float, n: int, seed: int,
                           interior: InteriorEstimate, threads: int = 1,
                           horizon: float = math.inf) -> BoundaryAtomEstimate:
    """Boundary weight at a reflecting endpoint from the mean hitting time of ``b``.

    Raises
    ------
    BoundaryAbsorbingError
        If :func:`detect_absorbing` finds the endpoint absorbing.
    """
    e = _side_geometry(simulator.measure, side, b)
    if n < 2:
        raise ValueError("insufficient samples: need at least 2 paths")
    if detect_absorbing(simulator, side, b, n=min(n, 1000), seed=path_seed(seed, 1), threads=threads):
        raise BoundaryAbsorbingError("boundary absorbing; atom is ∞ by definition")
    stop = (None, b) if side == "left" else (b, None)
    ens = simulator.simulate(e, horizon, n, path_seed(seed, 0), stop_window=stop, threads=threads)
    times = []
    for p in ens:
        tt = _hit_time(p, side, b)
        if tt is not None:
            times.append(tt)
    if len(times) < 2:
        raise ValueError("insufficient samples: fewer than 2 paths reached b")
    t = np.asarray(times)
    mean, mean_se = float(t.mean()), float(t.std(ddof=1) / math.sqrt(t.size))
    integral, integral_se = _interior_green_integral(interior, e, b)
    d = abs(b - e)
    raw = (mean - integral) / d
    se = math.sqrt(mean_se**2 + integral_se**2) / d
    return BoundaryAtomEstimate(max(float(raw), 0.0), float(se), float(raw), mean, mean_se, float(integral))
