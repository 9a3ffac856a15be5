"""Path functionals, exit statistics and two-sample distances between ensembles.

On recorded (discrete) paths the first passage to a closed level set and to
its open counterpart coincide, so a single first-passage time with ``>=`` /
``<=`` semantics is exposed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .simulate import Path, PathEnsemble

__all__ = [
    "first_passage",
    "exit_time",
    "ExitStats",
    "exit_stats",
    "ks_distance",
    "law_distance",
    "law_distances",
    "reference_window",
    "DEFAULT_FUNCTIONALS",
]


def first_passage(path: Path, level: float, direction: str = "upper") -> float | None:
    """First recorded time with value ``>= level`` (upper) or ``<= level`` (lower)."""
    v = path.values
    if direction == "upper":
        hit = np.nonzero(v >= level)[0]
    elif direction == "lower":
        hit = np.nonzero(v <= level)[0]
    else:
        raise ValueError("direction must be 'upper' or 'lower'")
    return float(path.times[hit[0]]) if hit.size else None


def exit_time(path: Path, a: float | None, b: float) -> tuple[float | None, bool | None]:
    """``(time, exited_at_upper)`` for the exit from ``(a, b)``; ``a=None`` means no lower level."""
    tb = first_passage(path, b, "upper")
    ta = None if a is None else first_passage(path, a, "lower")
    if ta is None and tb is None:
        return None, None
    if ta is None or (tb is not None and tb < ta):
        return tb, True
    return ta, False


@dataclass(frozen=True)
class ExitStats:
    """Empirical exit statistics of ``(a, b)`` (``a=None``: reflected at the left end)."""

    a: float | None
    b: float
    x0: float
    n: int
    p_hit_upper: float
    p_hit_upper_se: float
    mean_exit: float
    mean_exit_se: float
    second_moment_exit: float
    second_moment_exit_se: float
    censored_count: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = [self.a, self.b]
        return d


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def exit_stats(ens: PathEnsemble, a: float | None, b: float, x0: float) -> ExitStats:
    """Aggregate exit times of all paths from ``(a, b)``.

    Censored paths (no exit within the horizon) count as non-hits and are
    left out of the moment estimates.
    """
    if a is not None and not a < x0 < b:
        raise ValueError(f"need a < x0 < b, got a={a}, x0={x0}, b={b}")
    if a is None and not x0 < b:
        raise ValueError(f"need x0 < b, got x0={x0}, b={b}")
    tol = 1e-9 * max(1.0, abs(x0))
    if len(ens) and abs(ens.x0 - x0) > tol:
        raise ValueError(f"ensemble started at {ens.x0}, not at x0 = {x0}")
    times = []
    upper = []
    censored = 0
    for p in ens:
        t, up = exit_time(p, a, b)
        if t is None:
            censored += 1
            upper.append(0.0)
        else:
            times.append(t)
            upper.append(1.0 if up else 0.0)
    n = len(ens)
    up_arr = np.asarray(upper)
    p_hat = float(up_arr.mean()) if n else math.nan
    p_se = math.sqrt(p_hat * (1 - p_hat) / n) if n else math.nan
    t_arr = np.asarray(times)
    m1, m1_se = _mean_se(t_arr)
    m2, m2_se = _mean_se(t_arr**2)
    return ExitStats(a, float(b), float(x0), n, p_hat, p_se, m1, m1_se, m2, m2_se, censored)


def ks_distance(sample1, sample2) -> float:
    """Two-sample Kolmogorov-Smirnov statistic; ``None`` and NaN entries are dropped."""
    s1 = np.array([x for x in sample1 if x is not None], dtype=float)
    s2 = np.array([x for x in sample2 if x is not None], dtype=float)
    s1 = s1[~np.isnan(s1)]
    s2 = s2[~np.isnan(s2)]
    if s1.size == 0 or s2.size == 0:
        raise ValueError("empty sample")
    with warnings.catch_warnings():
        # only the statistic is used; the p-value underflows for tiny samples
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(stats.ks_2samp(s1, s2, method="asymp").statistic)


def _value_at(path: Path, t: float) -> float:
    """Value in force at time ``t`` (last record at or before ``t``); frozen after the path ends."""
    k = int(np.searchsorted(path.times, t, side="right")) - 1
    return float(path.values[max(k, 0)])


DEFAULT_FUNCTIONALS = ("x_quarter", "x_half", "x_end", "sup", "exit")


def reference_window(interval, x0: float) -> tuple[float, float]:
    """Default exit window for :func:`law_distance`: centred at ``x0``, half-width
    ``0.6 * min(x0 - l, r - x0, 1)``."""
    half = 0.6 * min(x0 - interval.left, interval.right - x0, 1.0)
    if not half > 0:
        raise ValueError("x0 must lie in the interior")
    return x0 - half, x0 + half


def _functional(ens: PathEnsemble, name: str, window) -> list:
    T = ens.horizon
    if name in ("x_quarter", "x_half", "x_end"):
        t = {"x_quarter": 0.25, "x_half": 0.5, "x_end": 1.0}[name] * T
        return [_value_at(p, t) for p in ens]
    if name == "sup":
        return [float(np.max(p.values[p.times <= T])) for p in ens]
    if name == "exit":
        a, b = window
        out = []
        for p in ens:
            t, _ = exit_time(p, a, b)
            out.append(math.inf if t is None or t > T else t)
        return out
    raise ValueError(f"unknown functional {name!r}")


def law_distances(ens1: PathEnsemble, ens2: PathEnsemble, functionals=None, window=None) -> dict:
    """KS statistic per path functional.

    Functionals: ``X`` at ``T/4``, ``T/2``, ``T``; the running maximum on
    ``[0, T]``; the exit time from ``window`` (censored exits map to ``+inf``,
    so they form a common atom in both samples).
    """
    if not math.isclose(ens1.horizon, ens2.horizon, rel_tol=1e-12):
        raise ValueError("ensembles have different horizons")
    if not math.isfinite(ens1.horizon):
        raise ValueError("law distance needs a finite horizon")
    functionals = DEFAULT_FUNCTIONALS if functionals is None else tuple(functionals)
    if window is None:
        raise ValueError("law distance needs a reference window for the exit functional")
    out = {}
    for name in functionals:
        f1 = _functional(ens1, name, window)
        f2 = _functional(ens2, name, window)
        out[name] = ks_distance(f1, f2)
    return out


def law_distance(ens1: PathEnsemble, ens2: PathEnsemble, functionals=None, window=None) -> float:
    """Largest KS statistic over the functional family (see :func:`law_distances`)."""
    return max(law_distances(ens1, ens2, functionals, window).values())
