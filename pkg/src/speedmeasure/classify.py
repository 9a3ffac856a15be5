"""Exact predicates on speed measures."""
from __future__ import annotations

import math

from .measures import SpeedMeasure, validate

__all__ = [
    "TailUndecidableError",
    "BOUNDARY_KINDS",
    "is_completely_regular",
    "boundary_kind",
    "has_feller_dynkin",
    "is_ito_diffusion",
    "classify",
]

BOUNDARY_KINDS = ("open_inaccessible", "reflecting_instantaneous", "reflecting_sticky", "absorbing")


class TailUndecidableError(ValueError):
    """No density piece with a symbolic form reaches the infinite endpoint."""


def is_completely_regular(m: SpeedMeasure) -> bool:
    """True iff ``m`` is locally finite on all of J: every closed-end weight is finite."""
    J = m.interval
    for side in ("left", "right"):
        if getattr(J, f"{side}_closed"):
            w = m.boundary_weight(side)
            if w is None or math.isinf(w):
                return False
    return True


def boundary_kind(m: SpeedMeasure, side: str) -> str:
    """One of :data:`BOUNDARY_KINDS`, read off the boundary weight."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if not getattr(m.interval, f"{side}_closed"):
        return "open_inaccessible"
    w = m.boundary_weight(side)
    if math.isinf(w):
        return "absorbing"
    return "reflecting_sticky" if w > 0 else "reflecting_instantaneous"


def _tail_moment(m: SpeedMeasure, side: str) -> float:
    """``∫ |x| m(dx)`` over the piece reaching the infinite ``side``, away from 0."""
    reaching = [p for p in m.pieces if (math.isinf(p.hi) if side == "right" else math.isinf(p.lo))]
    if not reaching:
        raise TailUndecidableError(f"no density piece reaches the {side} infinite endpoint")
    p = reaching[0]
    if side == "right":
        u = max(p.lo, 1.0)
        return p.integrate((0.0, 1.0), 0.0, u, math.inf)
    v = min(p.hi, -1.0)
    return p.integrate((0.0, -1.0), 0.0, -math.inf, v)


def has_feller_dynkin(m: SpeedMeasure) -> bool:
    """True iff J is bounded or every infinite endpoint is natural (``∫^∞ |x| m(dx) = ∞``).

    Tails are decided symbolically from the polynomial or power piece that
    reaches the endpoint.

    Raises
    ------
    TailUndecidableError
        If no piece reaches an infinite endpoint.
    """
    J = m.interval
    if J.bounded:
        return True
    for side, e in (("left", J.left), ("right", J.right)):
        if math.isinf(e) and math.isfinite(_tail_moment(m, side)):
            return False
    return True


def is_ito_diffusion(m: SpeedMeasure) -> bool:
    """True iff ``m`` has a density (no atoms), positive on J, with every finite open endpoint inaccessible.

    Raises
    ------
    ValueError
        If J is not open.
    """
    if not m.interval.is_open:
        raise ValueError(f"Itô-diffusion membership is defined for open J, got {m.interval}")
    if m.atoms:
        return False
    return not validate(m)


def classify(m: SpeedMeasure) -> dict:
    """All predicates in one JSON-ready dict."""
    try:
        fd = has_feller_dynkin(m)
    except TailUndecidableError:
        fd = "undecidable"
    try:
        ito = is_ito_diffusion(m)
    except ValueError:
        ito = "n/a"
    return {
        "completely_regular": is_completely_regular(m),
        "left": boundary_kind(m, "left"),
        "right": boundary_kind(m, "right"),
        "feller_dynkin": fd,
        "ito": ito,
    }
