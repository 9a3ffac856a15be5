"""Measure sequences used by the convergence experiments and tests.

Smooth densities that are not polynomials (exponentials, Gaussians) are
replaced by piecewise-polynomial surrogates: degree-5 Chebyshev interpolants
on short pieces, with the interpolation error reported by
:func:`surrogate_error`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .measures import Atom, DensityPiece, Interval, SpeedMeasure

__all__ = [
    "Sequence",
    "chebyshev_pieces",
    "surrogate_error",
    "sticky_point_sequence",
    "constant_sequence",
    "scaled_sequence",
    "exponential_boundary_sequence",
    "normal_spike_sequence",
    "plain_normal_sequence",
    "exponential_decay_sequence",
    "exponential_growth_tail_sequence",
    "persistent_atom_sequence",
    "sticky_boundary_sequence",
    "UNIT",
    "HALF_LINE",
    "REAL_LINE",
]

UNIT = Interval.closed(0.0, 1.0)
HALF_LINE = Interval(0.0, math.inf, True, False)
REAL_LINE = Interval(-math.inf, math.inf, False, False)

DEGREE = 5


@dataclass(frozen=True)
class Sequence:
    """A measure sequence ``m^n`` indexed by ``ns`` with its claimed limit."""

    name: str
    ns: tuple
    measures: tuple
    limit: SpeedMeasure
    converges: bool = True
    x0: float = 0.5
    window: tuple | None = None
    notes: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(zip(self.ns, self.measures))


def chebyshev_pieces(func, breaks, degree: int = DEGREE, offset: float = 0.0) -> list[DensityPiece]:
    """Degree-``degree`` Chebyshev interpolants of ``func`` (plus ``offset``) on consecutive breaks."""
    out = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        w = b - a
        c = Chebyshev.interpolate(lambda s: func(a + s), degree, domain=[0.0, w])
        p = c.convert(kind=Polynomial, domain=[0.0, w], window=[0.0, w])
        coeffs = np.array(p.coef, dtype=float)
        coeffs[0] += offset
        out.append(DensityPiece(float(a), float(b), tuple(coeffs)))
    return out


def surrogate_error(m: SpeedMeasure, func, lo: float, hi: float, n: int = 20001) -> float:
    """Sup-norm distance between the density of ``m`` and ``func`` on a fine grid of ``[lo, hi]``."""
    x = np.linspace(lo, hi, n)
    dens = np.array([m.density(t) for t in x])
    return float(np.max(np.abs(dens - func(x))))


def _indexed(name, ns, build, limit, **kw) -> Sequence:
    return Sequence(name, tuple(ns), tuple(build(n) for n in ns), limit, **kw)


def sticky_point_sequence(ns=(1, 2, 4, 8, 16), at: float = 0.5) -> Sequence:
    """``2 Lebesgue + (1/n) δ_at`` on [0, 1] (reflecting ends), converging to ``2 Lebesgue``."""
    base = SpeedMeasure.lebesgue(UNIT, 2.0)
    return _indexed("sticky_point", ns, lambda n: base.with_atoms(Atom(at, 1.0 / n)), base,
                    x0=0.5, window=(0.0, 1.0))


def constant_sequence(m0: SpeedMeasure | None = None, ns=(1, 2, 4, 8, 16), x0: float = 0.5) -> Sequence:
    m0 = SpeedMeasure.lebesgue(UNIT, 2.0) if m0 is None else m0
    return _indexed("constant", ns, lambda n: m0, m0, x0=x0)


def scaled_sequence(ns=(1, 2, 4, 8, 16)) -> Sequence:
    """``(1 + 1/n) 2 Lebesgue`` on [0, 1] converging to ``2 Lebesgue``."""
    base = SpeedMeasure.lebesgue(UNIT, 2.0)
    return _indexed("scaled", ns, lambda n: base.scaled(1.0 + 1.0 / n), base, x0=0.5)


def persistent_atom_sequence(ns=(1, 2, 4, 8, 16)) -> Sequence:
    """Negative control: ``2 Lebesgue + δ_0.5`` for every n, against the limit ``2 Lebesgue``."""
    base = SpeedMeasure.lebesgue(UNIT, 2.0)
    sticky = base.with_atoms(Atom(0.5, 1.0))
    return _indexed("persistent_atom", ns, lambda n: sticky, base, converges=False, x0=0.5)


def sticky_boundary_sequence(ns=(1, 2, 4, 8, 16), w0: float = 0.5, b: float = 1.5) -> Sequence:
    """``2 Lebesgue`` on [0, inf) with boundary weight ``w0 + 1/n``, converging to weight ``w0``."""
    base = SpeedMeasure.lebesgue(HALF_LINE, 2.0)
    return _indexed(
        "sticky_boundary", ns, lambda n: base.replace(left_boundary_weight=w0 + 1.0 / n),
        base.replace(left_boundary_weight=w0), x0=0.5, window=(0.0, b),
    )


def _exp_density(n: float):
    return lambda x: n * np.exp(-n * np.asarray(x, dtype=float))


def exponential_boundary(n: float) -> SpeedMeasure:
    """Surrogate of ``dx + n e^{-nx} dx`` on [0, inf).

    Pieces of width ``0.25/n`` carry the exponential until it drops below
    ``1e-6``; beyond that the density is exactly 1.
    """
    cut = math.log(n * 1e6) / n
    k = int(math.ceil(cut * n / 0.25))
    breaks = np.arange(k + 1) * (0.25 / n)
    pieces = chebyshev_pieces(_exp_density(n), breaks, offset=1.0)
    pieces.append(DensityPiece(float(breaks[-1]), math.inf, (1.0,)))
    return SpeedMeasure(HALF_LINE, tuple(pieces), (), 0.0, None)


def exponential_boundary_sequence(ns=(10, 100, 1000, 10000)) -> Sequence:
    """``dx + n e^{-nx} dx`` on [0, inf) converging to ``dx`` plus boundary weight 1 at 0."""
    limit = SpeedMeasure.lebesgue(HALF_LINE, 1.0, left_boundary_weight=1.0)
    return _indexed("exponential_boundary", ns, exponential_boundary, limit, x0=0.5, window=(0.0, 6.0),
                    notes={"surrogate": "degree-5 Chebyshev on width 0.25/n, tail cut at n e^{-nx} = 1e-6"})


def _normal_density(var: float):
    s = math.sqrt(var)
    return lambda x: np.exp(-0.5 * (np.asarray(x, dtype=float) / s) ** 2) / (s * math.sqrt(2 * math.pi))


def normal_spike(n: float) -> SpeedMeasure:
    """Surrogate of ``dx + N(0, 1/n)(dx)`` on the real line (Gaussian cut at 6 sd)."""
    s = 1.0 / math.sqrt(n)
    breaks = np.arange(-24, 25) * (0.25 * s)
    pieces = [DensityPiece(-math.inf, float(breaks[0]), (1.0,))]
    pieces += chebyshev_pieces(_normal_density(1.0 / n), breaks, offset=1.0)
    pieces.append(DensityPiece(float(breaks[-1]), math.inf, (1.0,)))
    return SpeedMeasure(REAL_LINE, tuple(pieces), (), None, None)


def normal_spike_sequence(ns=(1e2, 1e3, 1e4, 1e5, 1e6)) -> Sequence:
    """``dx + N(0, 1/n)`` converging to ``dx + δ_0``.

    The Lebesgue part keeps every member strictly positive on open sets, which
    a bare Gaussian tail cut at 6 sd would not be.
    """
    limit = SpeedMeasure.lebesgue(REAL_LINE, 1.0, atoms=(Atom(0.0, 1.0),))
    return _indexed("normal_spike", ns, normal_spike, limit, x0=0.25, window=(-8.0, 8.0),
                    notes={"surrogate": "dx + degree-5 Chebyshev of N(0,1/n) on width sd/4 within 6 sd"})


def plain_normal(n: float) -> SpeedMeasure:
    """Surrogate of the bare ``N(0, 1/n)(dx)`` on the line (zero beyond 6 sd); not a speed measure."""
    s = 1.0 / math.sqrt(n)
    breaks = np.arange(-24, 25) * (0.25 * s)
    pieces = [DensityPiece(-math.inf, float(breaks[0]), (0.0,))]
    pieces += chebyshev_pieces(_normal_density(1.0 / n), breaks)
    pieces.append(DensityPiece(float(breaks[-1]), math.inf, (0.0,)))
    return SpeedMeasure(REAL_LINE, tuple(pieces), (), None, None)


def plain_normal_sequence(ns=(1e2, 1e3, 1e4, 1e5, 1e6)) -> Sequence:
    """``N(0, 1/n) → δ_0`` vaguely.  Neither side is a speed measure (zero mass
    off the spike), so this sequence is for :func:`speed_sense_check` only."""
    limit = SpeedMeasure(REAL_LINE, (), (Atom(0.0, 1.0),), None, None)
    return _indexed("plain_normal", ns, plain_normal, limit, x0=0.25)


# surrogate tails start beyond the supports of the default test families on the line (|x| < 64)
TAIL_START = 256.0


def exponential_decay(n: float, half_width: float = TAIL_START) -> SpeedMeasure:
    """Surrogate of ``e^{-|x|/n} dx``: Chebyshev pieces on ``[-L, L]`` (``L = half_width``),
    then tails ``c |x|^{-3}`` matched in value at ``±L``.

    The power tails keep ``∫^∞ x m(dx)`` finite, as for the exponential itself.
    """
    L = half_width
    f = lambda x: np.exp(-np.abs(np.asarray(x, dtype=float)) / n)
    breaks = np.linspace(-L, L, int(2 * L) + 1)
    c = float(f(L)) * L**3
    pieces = [DensityPiece(-math.inf, -L, (c,), "power", -3.0, 0.0)]
    pieces += chebyshev_pieces(f, breaks)
    pieces.append(DensityPiece(L, math.inf, (c,), "power", -3.0, 0.0))
    return SpeedMeasure(REAL_LINE, tuple(pieces), (), None, None)


def exponential_decay_sequence(ns=(10, 100, 1000, 10000)) -> Sequence:
    """``e^{-|x|/n} dx`` converging to ``dx``: every member lacks the Feller-Dynkin property, the limit has it."""
    return _indexed("exponential_decay", ns, exponential_decay, SpeedMeasure.lebesgue(REAL_LINE, 1.0),
                    x0=0.25, window=(-8.0, 8.0))


def cubic_tail(scale: float = 1.0, growth: float = 0.0, half_width: float = TAIL_START) -> SpeedMeasure:
    """Surrogate of ``e^{growth |x|} dx / (|x|^3 ∨ 1)``.

    With ``growth = 0`` the tails are exact power pieces ``|x|^{-3}``; with
    ``growth > 0`` the tails beyond ``±L`` are the increasing quadratics
    matching value and slope at ``±L``, so they stay polynomial and the tail
    moment diverges.
    """
    L = half_width
    if growth == 0.0:
        pieces = [
            DensityPiece(-math.inf, -1.0, (scale,), "power", -3.0, 0.0),
            DensityPiece(-1.0, 1.0, (scale,)),
            DensityPiece(1.0, math.inf, (scale,), "power", -3.0, 0.0),
        ]
        return SpeedMeasure(REAL_LINE, tuple(pieces), (), None, None)
    f = lambda x: scale * np.exp(growth * np.abs(np.asarray(x, dtype=float))) / np.maximum(np.abs(np.asarray(x, dtype=float)) ** 3, 1.0)
    k = int(math.ceil(math.log(L) / math.log(1.05)))
    outer = np.geomspace(1.0, L, k + 1)
    breaks = np.concatenate((-outer[::-1], np.linspace(-1.0, 1.0, 9)[1:-1], outer))
    v = float(f(L))
    d = scale * math.exp(growth * L) * (growth / L**3 - 3.0 / L**4)
    slope = max(d, 0.0)
    # right tail about L: v + slope*(x-L) + (x-L)^2; left tail about -L mirrored
    pieces = [DensityPiece(-math.inf, -L, (v, -slope, 1.0))]
    pieces += chebyshev_pieces(f, breaks)
    pieces.append(DensityPiece(L, math.inf, (v, slope, 1.0)))
    return SpeedMeasure(REAL_LINE, tuple(pieces), (), None, None)


def exponential_growth_tail_sequence(ns=(10, 100, 1000, 10000)) -> Sequence:
    """``e^{|x|/n} dx / (|x|^3 ∨ 1)`` converging to ``dx / (|x|^3 ∨ 1)``:
    every member has the Feller-Dynkin property, the limit does not."""
    return _indexed("exponential_growth_tail", ns, lambda n: cubic_tail(growth=1.0 / n), cubic_tail(),
                    x0=0.25, window=(-8.0, 8.0))
