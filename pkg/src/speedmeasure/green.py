"""Green functions on natural scale and exact expected exit times.

Normalisation: standard Brownian motion has speed measure ``2 * Lebesgue``,
so ``∫ G_(a,b)(x, y) 2 dy = (x - a)(b - x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .measures import Interval, PiecewisePolynomial, SpeedMeasure, integrate

__all__ = ["GreenKind", "green", "expected_exit_time", "green_function"]

_KINDS = ("open", "left", "right")


@dataclass(frozen=True)
class GreenKind:
    """Window for a Green function.

    ``kind="open"``: killed at both ``a`` and ``b``.
    ``kind="left"``: reflected at the closed endpoint ``a`` (= l), killed at ``b``.
    ``kind="right"``: killed at ``a``, reflected at the closed endpoint ``b`` (= r).
    """

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("Green window endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"Green window needs a < b, got ({self.a}, {self.b})")

    @classmethod
    def open(cls, a: float, b: float) -> "GreenKind":
        return cls("open", a, b)

    @classmethod
    def left_reflected(cls, l: float, b: float) -> "GreenKind":
        return cls("left", l, b)

    @classmethod
    def right_reflected(cls, a: float, r: float) -> "GreenKind":
        return cls("right", a, r)

    @property
    def region(self) -> Interval:
        """Set integrated over: the window minus its killed endpoints."""
        return Interval(self.a, self.b, self.kind == "left", self.kind == "right")

    def _check(self, *pts: float) -> None:
        for p in pts:
            if not self.a <= p <= self.b:
                raise ValueError(f"point {p} outside Green domain [{self.a}, {self.b}]")


def green(kind: GreenKind, x: float, y: float) -> float:
    """Value of the Green function of ``kind`` at ``(x, y)``."""
    kind._check(x, y)
    a, b = kind.a, kind.b
    lo, hi = min(x, y), max(x, y)
    if kind.kind == "open":
        return (lo - a) * (b - hi) / (b - a)
    if kind.kind == "left":
        return b - hi
    return lo - a


def green_function(kind: GreenKind, x: float) -> PiecewisePolynomial:
    """``y -> G(x, y)`` as a piecewise polynomial on the window."""
    kind._check(x)
    a, b = kind.a, kind.b
    if kind.kind == "open":
        L = b - a
        return PiecewisePolynomial(
            (
                (a, x, (0.0, (b - x) / L)),
                (x, b, ((x - a) * (b - x) / L, -(x - a) / L)),
            )
        )
    if kind.kind == "left":
        return PiecewisePolynomial(((a, x, (b - x,)), (x, b, (b - x, -1.0))))
    return PiecewisePolynomial(((a, x, (0.0, 1.0)), (x, b, (x - a,))))


def _check_domain(m: SpeedMeasure, kind: GreenKind) -> None:
    J = m.interval
    if kind.a < J.left or kind.b > J.right:
        raise ValueError(f"Green window [{kind.a}, {kind.b}] not inside {J}")
    if kind.kind == "left" and not (kind.a == J.left and J.left_closed):
        raise ValueError("left-reflected window must start at a closed left endpoint")
    if kind.kind == "right" and not (kind.b == J.right and J.right_closed):
        raise ValueError("right-reflected window must end at a closed right endpoint")


def expected_exit_time(m: SpeedMeasure, kind: GreenKind, x: float) -> float:
    """Exact ``E_x`` of the exit time from the window: ``∫ G(x, y) m(dy)``.

    Reflected windows include the boundary weight at the reflecting end, so an
    absorbing (infinite) weight there gives ``inf``.
    """
    _check_domain(m, kind)
    return integrate(m, green_function(kind, x), kind.region)
