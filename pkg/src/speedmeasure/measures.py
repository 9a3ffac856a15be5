"""State intervals, speed measures and exact integration against them.

A speed measure is stored as a piecewise density on the interior of the state
interval, finitely many interior atoms, and (for closed endpoints) a boundary
weight which may be ``inf`` to mark an absorbing boundary.  Densities are
polynomials or power laws ``c * |x - anchor| ** p`` on each piece, so every
integral against a piecewise-polynomial test function is available in closed
form, including the improper ones that decide boundary accessibility.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _calculus as calc

__all__ = [
    "Interval",
    "DensityPiece",
    "Atom",
    "SpeedMeasure",
    "PiecewisePolynomial",
    "TestFamily",
    "Violation",
    "hat",
    "half_hat",
    "constant",
    "interior_family",
    "boundary_family",
    "validate",
    "integrate",
    "mass",
    "density_mass",
    "vague_distance",
]

AUDIT_POINTS = 1024
_NEG_TOL = 1e-12


def _fmt(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _parse(x) -> float:
    if isinstance(x, str):
        if x in ("inf", "+inf"):
            return math.inf
        if x == "-inf":
            return -math.inf
        raise ValueError(f"not a number: {x!r}")
    return float(x)


@dataclass(frozen=True)
class Interval:
    """A real interval with open/closed flags; infinite ends are always open."""

    left: float
    right: float
    left_closed: bool = True
    right_closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "left", float(self.left))
        object.__setattr__(self, "right", float(self.right))
        if math.isnan(self.left) or math.isnan(self.right):
            raise ValueError("interval endpoints must not be NaN")
        if not self.left < self.right:
            raise ValueError(f"interval needs left < right, got [{self.left}, {self.right}]")
        if (math.isinf(self.left) and self.left_closed) or (
            math.isinf(self.right) and self.right_closed
        ):
            raise ValueError("an infinite endpoint cannot be closed")

    @classmethod
    def closed(cls, left: float, right: float) -> "Interval":
        return cls(left, right, not math.isinf(left), not math.isinf(right))

    @classmethod
    def open(cls, left: float, right: float) -> "Interval":
        return cls(left, right, False, False)

    @property
    def bounded(self) -> bool:
        return not (math.isinf(self.left) or math.isinf(self.right))

    @property
    def is_open(self) -> bool:
        return not (self.left_closed or self.right_closed)

    def contains(self, x: float) -> bool:
        if x < self.left or x > self.right:
            return False
        if x == self.left and not self.left_closed:
            return False
        if x == self.right and not self.right_closed:
            return False
        return True

    def in_interior(self, x: float) -> bool:
        return self.left < x < self.right

    def within_closure_of(self, other: "Interval") -> bool:
        return other.left <= self.left and self.right <= other.right

    def to_dict(self) -> dict:
        return {
            "left": _fmt(self.left),
            "right": _fmt(self.right),
            "left_closed": self.left_closed,
            "right_closed": self.right_closed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Interval":
        return cls(_parse(d["left"]), _parse(d["right"]), bool(d["left_closed"]), bool(d["right_closed"]))

    def __str__(self) -> str:
        lb = "[" if self.left_closed else "("
        rb = "]" if self.right_closed else ")"
        return f"{lb}{self.left:g}, {self.right:g}{rb}"


@dataclass(frozen=True)
class DensityPiece:
    """Density on ``[lo, hi]``.

    ``kind="polynomial"``: ``sum(coeffs[k] * (x - origin)**k)`` where the
    origin is ``lo`` (or ``hi`` when ``lo`` is ``-inf``, or 0 on the whole line).
    ``kind="power"``: ``coeffs[0] * |x - anchor|**exponent`` with the anchor
    outside the open piece.
    """

    lo: float
    hi: float
    coeffs: tuple = (1.0,)
    kind: str = "polynomial"
    exponent: float | None = None
    anchor: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("density piece needs at least one coefficient")
        if self.kind not in ("polynomial", "constant", "power"):
            raise ValueError(f"unknown piece kind {self.kind!r}")
        if self.kind == "constant":
            if len(self.coeffs) != 1:
                raise ValueError("constant piece takes one coefficient")
            object.__setattr__(self, "kind", "polynomial")
        if self.kind == "power":
            if self.exponent is None or self.anchor is None:
                raise ValueError("power piece needs exponent and anchor")
            if len(self.coeffs) != 1:
                raise ValueError("power piece takes one coefficient (the scale)")
            if self.lo < self.anchor < self.hi:
                raise ValueError("power anchor must lie outside the piece")

    @property
    def origin(self) -> float:
        if self.kind == "power":
            return float(self.anchor)
        if not math.isinf(self.lo):
            return self.lo
        if not math.isinf(self.hi):
            return self.hi
        return 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return self.coeffs[0] * np.abs(x - self.anchor) ** self.exponent
        return np.polynomial.polynomial.polyval(x - self.origin, self.coeffs)

    def integrate(self, coeffs, origin: float, u: float, v: float) -> float:
        """Integral over [u, v] (clipped to the piece) of q * density."""
        u = max(u, self.lo)
        v = min(v, self.hi)
        if not u < v:
            return 0.0
        if self.kind == "power":
            return calc.integrate_power(self.coeffs[0], self.exponent, self.anchor, coeffs, origin, u, v)
        q = calc.shift(coeffs, origin, self.origin)
        prod = np.polynomial.polynomial.polymul(q, self.coeffs)
        return calc.integrate_polynomial(prod, self.origin, u, v)

    def to_dict(self) -> dict:
        d = {"from": _fmt(self.lo), "to": _fmt(self.hi), "coeffs": list(self.coeffs)}
        if self.kind == "power":
            d.update(kind="power", exponent=self.exponent, anchor=self.anchor)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DensityPiece":
        kind = d.get("kind", "polynomial")
        return cls(
            _parse(d["from"]),
            _parse(d["to"]),
            tuple(d["coeffs"]),
            kind,
            d.get("exponent"),
            d.get("anchor"),
        )


@dataclass(frozen=True)
class Atom:
    at: float
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "at", float(self.at))
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class SpeedMeasure:
    """Speed measure on ``interval``.

    The constructor only normalises types; use :func:`validate` for the
    regularity and boundary invariants.  A closed endpoint without an explicit
    weight gets weight 0 (instantaneous reflection).
    """

    interval: Interval
    pieces: tuple = ()
    atoms: tuple = ()
    left_boundary_weight: float | None = None
    right_boundary_weight: float | None = None

    def __post_init__(self):
        pieces = tuple(p if isinstance(p, DensityPiece) else DensityPiece(*p) for p in self.pieces)
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "atoms", atoms)
        J = self.interval
        for side in ("left", "right"):
            name = f"{side}_boundary_weight"
            w = getattr(self, name)
            if w is None and getattr(J, f"{side}_closed"):
                w = 0.0
            object.__setattr__(self, name, None if w is None else float(w))

    # -- construction helpers -------------------------------------------------
    @classmethod
    def lebesgue(
        cls,
        interval: Interval,
        density: float = 1.0,
        atoms: Iterable = (),
        left_boundary_weight: float | None = None,
        right_boundary_weight: float | None = None,
    ) -> "SpeedMeasure":
        """``density * Lebesgue`` on the interval, plus optional atoms."""
        return cls(
            interval,
            (DensityPiece(interval.left, interval.right, (density,)),),
            tuple(atoms),
            left_boundary_weight,
            right_boundary_weight,
        )

    def replace(self, **changes) -> "SpeedMeasure":
        d = dict(
            interval=self.interval,
            pieces=self.pieces,
            atoms=self.atoms,
            left_boundary_weight=self.left_boundary_weight,
            right_boundary_weight=self.right_boundary_weight,
        )
        d.update(changes)
        return SpeedMeasure(**d)

    def with_atoms(self, *atoms) -> "SpeedMeasure":
        merged = sorted(self.atoms + tuple(Atom(*a) if not isinstance(a, Atom) else a for a in atoms), key=lambda a: a.at)
        return self.replace(atoms=tuple(merged))

    def scaled(self, c: float) -> "SpeedMeasure":
        if not c > 0:
            raise ValueError("scale must be positive")
        pieces = tuple(
            DensityPiece(p.lo, p.hi, tuple(c * x for x in p.coeffs), p.kind, p.exponent, p.anchor) for p in self.pieces
        )
        atoms = tuple(Atom(a.at, c * a.weight) for a in self.atoms)
        lw = None if self.left_boundary_weight is None else c * self.left_boundary_weight
        rw = None if self.right_boundary_weight is None else c * self.right_boundary_weight
        return SpeedMeasure(self.interval, pieces, atoms, lw, rw)

    def boundary_weight(self, side: str) -> float | None:
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        return getattr(self, f"{side}_boundary_weight")

    def endpoint(self, side: str) -> float:
        return self.interval.left if side == "left" else self.interval.right

    def density(self, x: float) -> float:
        for p in self.pieces:
            if p.lo <= x <= p.hi:
                return float(p(x))
        return 0.0

    # -- serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "interval": self.interval.to_dict(),
            "pieces": [p.to_dict() for p in self.pieces],
            "atoms": [{"at": a.at, "weight": a.weight} for a in self.atoms],
        }
        if self.interval.left_closed and self.left_boundary_weight is not None:
            d["left_boundary_weight"] = _fmt(self.left_boundary_weight)
        if self.interval.right_closed and self.right_boundary_weight is not None:
            d["right_boundary_weight"] = _fmt(self.right_boundary_weight)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpeedMeasure":
        J = Interval.from_dict(d["interval"])
        pieces = tuple(DensityPiece.from_dict(p) for p in d.get("pieces", []))
        atoms = tuple(Atom(float(a["at"]), float(a["weight"])) for a in d.get("atoms", []))
        lw = d.get("left_boundary_weight")
        rw = d.get("right_boundary_weight")
        return cls(J, pieces, atoms, None if lw is None else _parse(lw), None if rw is None else _parse(rw))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "SpeedMeasure":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


# -- test functions -------------------------------------------------------------


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Function that is polynomial on each listed piece and zero elsewhere.

    Each piece is ``(lo, hi, coeffs)`` with coefficients about the piece's
    ``lo`` (or ``hi`` / 0 for unbounded pieces, as for density pieces).
    """

    pieces: tuple

    def __post_init__(self):
        norm = []
        for lo, hi, c in self.pieces:
            lo, hi = float(lo), float(hi)
            if hi < lo:
                raise ValueError("piece with hi < lo")
            norm.append((lo, hi, tuple(float(x) for x in c)))
        object.__setattr__(self, "pieces", tuple(norm))

    @staticmethod
    def _origin(lo: float, hi: float) -> float:
        if not math.isinf(lo):
            return lo
        if not math.isinf(hi):
            return hi
        return 0.0

    def iter_pieces(self):
        for lo, hi, c in self.pieces:
            yield lo, hi, c, self._origin(lo, hi)

    def __call__(self, x: float) -> float:
        for lo, hi, c, o in self.iter_pieces():
            if lo <= x <= hi:
                return calc.polyval(c, o, x)
        return 0.0

    @property
    def support(self) -> tuple[float, float]:
        return min(p[0] for p in self.pieces), max(p[1] for p in self.pieces)

    def sup_norm(self) -> float:
        best = 0.0
        for lo, hi, c, o in self.iter_pieces():
            if math.isinf(lo) or math.isinf(hi):
                if len(calc.trim(c)) > 1:
                    return math.inf
                best = max(best, abs(c[0]))
                continue
            pts = [lo, hi]
            d = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)
            if np.any(d):
                for r in np.roots(calc.trim(d)[::-1]):
                    if abs(r.imag) < 1e-12 and lo <= o + r.real <= hi:
                        pts.append(o + r.real)
            best = max(best, max(abs(calc.polyval(c, o, p)) for p in pts))
        return best

    def __add__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return _sum_pp(self, other)

    def scaled(self, c: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(tuple((lo, hi, tuple(c * x for x in cc)) for lo, hi, cc in self.pieces))


def _sum_pp(f: PiecewisePolynomial, g: PiecewisePolynomial) -> PiecewisePolynomial:
    cuts = sorted({x for lo, hi, _ in f.pieces + g.pieces for x in (lo, hi)})
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        o = PiecewisePolynomial._origin(lo, hi)
        acc = np.zeros(1)
        for h in (f, g):
            for plo, phi, c, po in h.iter_pieces():
                if plo <= lo and hi <= phi:
                    acc = np.polynomial.polynomial.polyadd(acc, calc.shift(c, po, o))
                    break
        out.append((lo, hi, tuple(acc)))
    return PiecewisePolynomial(tuple(out))


def constant(value: float = 1.0, lo: float = -math.inf, hi: float = math.inf) -> PiecewisePolynomial:
    return PiecewisePolynomial(((lo, hi, (value,)),))


def hat(left: float, center: float, right: float, height: float = 1.0) -> PiecewisePolynomial:
    """Piecewise-linear bump: 0 at ``left`` and ``right``, ``height`` at ``center``."""
    if not left < center < right:
        raise ValueError("hat needs left < center < right")
    return PiecewisePolynomial(
        (
            (left, center, (0.0, height / (center - left))),
            (center, right, (height, -height / (right - center))),
        )
    )


def half_hat(endpoint: float, width: float, side: str = "left", height: float = 1.0) -> PiecewisePolynomial:
    """Linear ramp equal to ``height`` at a boundary point and 0 at distance ``width``."""
    if width <= 0:
        raise ValueError("width must be positive")
    if side == "left":
        return PiecewisePolynomial(((endpoint, endpoint + width, (height, -height / width)),))
    return PiecewisePolynomial(((endpoint - width, endpoint, (0.0, height / width)),))


# -- dyadic test families -------------------------------------------------------


def _from_unit(J: Interval, u: float) -> float:
    """Homeomorphism (0, 1) -> interior of J used to lay dyadic grids."""
    l, r = J.left, J.right
    if J.bounded:
        return l + u * (r - l)
    if not math.isinf(l):
        return l + u / (1.0 - u)
    if not math.isinf(r):
        return r - (1.0 - u) / u
    v = 2.0 * u - 1.0
    return v / (1.0 - abs(v))


@dataclass(frozen=True)
class TestFamily:
    """Finite, ordered family of compactly supported test functions."""

    __test__ = False  # not a pytest class

    kind: str
    interval: Interval
    functions: tuple = field(repr=False)

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)


def interior_family(J: Interval, K: int = 64) -> TestFamily:
    """First ``K`` hats of the dyadic family exhausting the interior of J.

    Level k has centres at ``j / 2**k`` (j = 1 .. 2**k - 1) in unit
    coordinates and half-width ``2**-(k+1)``, so every support is compact in
    the open interior.
    """
    fs = []
    k = 1
    while len(fs) < K:
        w = 0.5 ** (k + 1)
        for j in range(1, 2**k):
            c = j * 0.5**k
            fs.append(hat(_from_unit(J, c - w), _from_unit(J, c), _from_unit(J, c + w)))
            if len(fs) == K:
                break
        k += 1
    return TestFamily("interior", J, tuple(fs))


def boundary_family(J: Interval, side: str, K: int = 8) -> TestFamily:
    """Ramps with value 1 at a closed endpoint and support shrinking dyadically."""
    closed = J.left_closed if side == "left" else J.right_closed
    if not closed:
        raise ValueError(f"{side} endpoint of {J} is not closed")
    fs = []
    for k in range(1, K + 1):
        if side == "left":
            width = _from_unit(J, 0.5**k) - J.left
            fs.append(half_hat(J.left, width, "left"))
        else:
            width = J.right - _from_unit(J, 1.0 - 0.5**k)
            fs.append(half_hat(J.right, width, "right"))
    return TestFamily(side, J, tuple(fs))


# -- integration ----------------------------------------------------------------


def _as_region(m: SpeedMeasure, region) -> Interval:
    if region is None:
        return m.interval
    if isinstance(region, Interval):
        return region
    lo, hi = region
    return Interval(lo, hi, not math.isinf(lo), not math.isinf(hi)) if lo < hi else _Point(lo)


class _Point:
    """Degenerate closed region {x}."""

    def __init__(self, x: float):
        self.left = self.right = float(x)
        self.left_closed = self.right_closed = True

    def contains(self, y: float) -> bool:
        return y == self.left

    def within_closure_of(self, other: Interval) -> bool:
        return other.left <= self.left <= other.right


def integrate(m: SpeedMeasure, f: PiecewisePolynomial, region=None) -> float:
    """``∫_region f dm`` including interior atoms and boundary weights in the region.

    ``region`` is an :class:`Interval` (its open/closed flags decide whether
    atoms on its edges count), a ``(lo, hi)`` pair taken as closed, or None for
    the whole state interval.  An infinite boundary weight contributes
    ``inf * f(endpoint)`` with the convention ``0 * inf = 0``.
    """
    R = _as_region(m, region)
    if not R.within_closure_of(m.interval):
        raise ValueError(f"region [{R.left}, {R.right}] not contained in {m.interval}")
    total = 0.0
    if R.left < R.right:
        for flo, fhi, fc, fo in f.iter_pieces():
            u0 = max(flo, R.left)
            v0 = min(fhi, R.right)
            if not u0 < v0:
                continue
            for p in m.pieces:
                total = calc.add(total, p.integrate(fc, fo, u0, v0))
    for a in m.atoms:
        if R.contains(a.at):
            total = calc.add(total, a.weight * f(a.at))
    J = m.interval
    for side, x, w in (
        ("left", J.left, m.left_boundary_weight),
        ("right", J.right, m.right_boundary_weight),
    ):
        if w is None or not getattr(J, f"{side}_closed") or not R.contains(x):
            continue
        fx = f(x)
        if fx == 0.0:
            continue
        total = calc.add(total, w * fx)
    return total


def mass(m: SpeedMeasure, region=None) -> float:
    """Total mass of ``region`` (see :func:`integrate`)."""
    return integrate(m, constant(1.0), region)


def _piece_primitive(p: DensityPiece, x: np.ndarray) -> np.ndarray:
    """Antiderivative of the piece density, vectorised; x must lie in the piece."""
    if p.kind == "power":
        e = p.exponent + 1.0
        s = np.abs(x - p.anchor)
        sign = 1.0 if p.anchor <= p.lo else -1.0
        val = np.log(s) if e == 0.0 else s**e / e
        return sign * p.coeffs[0] * val
    return np.polynomial.polynomial.polyval(x - p.origin, np.polynomial.polynomial.polyint(p.coeffs))


def density_mass(m: SpeedMeasure, edges) -> np.ndarray:
    """Mass of the density part (no atoms or boundary weights) between consecutive finite edges."""
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) < 0) or not np.all(np.isfinite(e)):
        raise ValueError("edges must be a finite nondecreasing array of length >= 2")
    out = np.zeros(e.size - 1)
    for p in m.pieces:
        lo = max(p.lo, e[0])
        hi = min(p.hi, e[-1])
        if not lo < hi:
            continue
        c = np.clip(e, lo, hi)
        F = _piece_primitive(p, c)
        out += np.diff(F)
    return out


def restrict(m: SpeedMeasure, lo: float, hi: float) -> SpeedMeasure:
    """Restriction of ``m`` to the closed interval ``[lo, hi]`` inside J.

    Atoms sitting exactly on ``lo`` or ``hi`` become boundary weights; an end
    that coincides with a closed endpoint of J keeps that endpoint's weight.
    """
    J = m.interval
    if not (J.left <= lo < hi <= J.right):
        raise ValueError(f"[{lo}, {hi}] not inside {J}")
    pieces = []
    for p in m.pieces:
        a, b = max(p.lo, lo), min(p.hi, hi)
        if a < b:
            if p.kind == "power":
                pieces.append(DensityPiece(a, b, p.coeffs, "power", p.exponent, p.anchor))
            else:
                pieces.append(DensityPiece(a, b, tuple(calc.shift(p.coeffs, p.origin, a))))
    atoms = tuple(at for at in m.atoms if lo < at.at < hi)

    def edge_weight(x, side):
        if x == (J.left if side == "left" else J.right):
            w = m.boundary_weight(side)
            return 0.0 if w is None else w
        return sum(at.weight for at in m.atoms if at.at == x)

    return SpeedMeasure(
        Interval(lo, hi, math.isfinite(lo), math.isfinite(hi)),
        tuple(pieces),
        atoms,
        edge_weight(lo, "left") if math.isfinite(lo) else None,
        edge_weight(hi, "right") if math.isfinite(hi) else None,
    )


def _discrepancy(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b)


def vague_distance(m1: SpeedMeasure, m2: SpeedMeasure, family: TestFamily | None = None) -> float:
    """``max_f |∫f dm1 - ∫f dm2| / (1 + ||f||_inf)`` over a finite test family."""
    if m1.interval != m2.interval:
        raise ValueError("measures live on different intervals")
    if family is None:
        family = interior_family(m1.interval)
    best = 0.0
    for f in family:
        d = _discrepancy(integrate(m1, f), integrate(m2, f)) / (1.0 + f.sup_norm())
        best = max(best, d)
    return best


# -- validation -----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    invariant: str
    location: object
    message: str

    def to_dict(self) -> dict:
        loc = self.location
        if isinstance(loc, float):
            loc = _fmt(loc)
        return {"invariant": self.invariant, "location": loc, "message": self.message}


def _audit_grid(p: DensityPiece) -> np.ndarray:
    lo, hi = p.lo, p.hi
    if math.isinf(lo) and math.isinf(hi):
        lo, hi = -1.0, 1.0
    elif math.isinf(lo):
        lo = hi - max(1.0, abs(hi))
    elif math.isinf(hi):
        hi = lo + max(1.0, abs(lo))
    return np.linspace(lo, hi, AUDIT_POINTS + 2)


def _piece_violations(i: int, p: DensityPiece, J: Interval) -> list[Violation]:
    out = []
    if not p.lo < p.hi:
        out.append(Violation("piece_order", i, f"piece {i} has from >= to"))
        return out
    if p.lo < J.left or p.hi > J.right:
        out.append(Violation("piece_in_interval", i, f"piece {i} [{p.lo}, {p.hi}] leaves {J}"))
    if p.kind == "power":
        c = p.coeffs[0]
        if c < 0:
            out.append(Violation("density_nonnegative", i, f"piece {i} has negative scale"))
        elif c == 0:
            out.append(Violation("positivity", i, f"piece {i} is identically zero"))
        a, e = p.anchor, p.exponent
        if e <= -1.0 and a in (p.lo, p.hi):
            at_open_end = (a == J.left and not J.left_closed) or (a == J.right and not J.right_closed)
            if not at_open_end:
                out.append(
                    Violation("locally_finite", a, f"piece {i} has non-integrable singularity at {a}")
                )
        return out
    x = _audit_grid(p)
    vals = p(x)
    scale = max(1.0, float(np.max(np.abs(vals))))
    bad = np.nonzero(vals < -_NEG_TOL * scale)[0]
    if bad.size:
        out.append(Violation("density_nonnegative", float(x[bad[0]]), f"piece {i} negative at {x[bad[0]]:g}"))
    if not np.any(vals > 0):
        out.append(Violation("positivity", i, f"piece {i} has zero mass"))
    c = calc.trim(p.coeffs)
    if math.isinf(p.hi) and c[-1] < 0:
        out.append(Violation("density_nonnegative", math.inf, f"piece {i} negative towards +inf"))
    if math.isinf(p.lo) and c[-1] * (-1) ** (len(c) - 1) < 0:
        out.append(Violation("density_nonnegative", -math.inf, f"piece {i} negative towards -inf"))
    return out


def _endpoint_integral(m: SpeedMeasure, side: str) -> float:
    """``∫ |e - x| m(dx)`` near a finite endpoint e, over the piece touching it."""
    J = m.interval
    e = J.left if side == "left" else J.right
    touching = [p for p in m.pieces if (p.lo == e if side == "left" else p.hi == e)]
    if not touching:
        return 0.0
    p = touching[0]
    if side == "left":
        return p.integrate((0.0, 1.0), e, p.lo, p.hi)
    return p.integrate((0.0, -1.0), e, p.lo, p.hi)


def validate(m: SpeedMeasure) -> list[Violation]:
    """List every violated speed-measure invariant (empty when valid)."""
    J = m.interval
    out: list[Violation] = []
    for i, p in enumerate(m.pieces):
        out.extend(_piece_violations(i, p, J))

    # tiling of the interior
    pieces = sorted((p for p in m.pieces if p.lo < p.hi), key=lambda p: p.lo)
    if not pieces:
        out.append(Violation("coverage", J.left, "no density pieces: interior has zero mass"))
    else:
        if pieces[0].lo > J.left:
            out.append(Violation("coverage", J.left, f"gap [{J.left:g}, {pieces[0].lo:g}] has zero mass"))
        if pieces[-1].hi < J.right:
            out.append(Violation("coverage", J.right, f"gap [{pieces[-1].hi:g}, {J.right:g}] has zero mass"))
        for a, b in zip(pieces[:-1], pieces[1:]):
            tol = 1e-12 * max(1.0, abs(a.hi))
            if b.lo > a.hi + tol:
                out.append(Violation("coverage", a.hi, f"gap [{a.hi:g}, {b.lo:g}] has zero mass"))
            elif b.lo < a.hi - tol:
                out.append(Violation("piece_order", b.lo, f"pieces overlap at {b.lo:g}"))

    # atoms
    locs = [a.at for a in m.atoms]
    for a in m.atoms:
        if not J.in_interior(a.at):
            out.append(Violation("atom_location", a.at, f"atom at {a.at:g} not in the interior of {J}"))
        if not (a.weight > 0 and math.isfinite(a.weight)):
            out.append(Violation("atom_weight", a.at, f"atom at {a.at:g} needs finite positive weight"))
    if len(set(locs)) != len(locs):
        dup = next(x for x in locs if locs.count(x) > 1)
        out.append(Violation("atoms_distinct", dup, f"atoms not distinct at {dup:g}"))
    if locs != sorted(locs):
        out.append(Violation("atoms_sorted", None, "atoms not sorted by location"))

    # boundary weights and accessibility of finite open endpoints
    for side in ("left", "right"):
        e = J.left if side == "left" else J.right
        closed = getattr(J, f"{side}_closed")
        w = m.boundary_weight(side)
        if closed:
            if w is None or math.isnan(w) or w < 0:
                out.append(Violation("boundary_weight", e, f"{side} boundary weight must be in [0, inf]"))
        else:
            if w is not None:
                out.append(Violation("boundary_weight", e, f"{side} endpoint is open but carries a weight"))
            if not math.isinf(e):
                try:
                    val = _endpoint_integral(m, side)
                except ValueError:
                    val = math.inf
                if math.isfinite(val):
                    out.append(
                        Violation(
                            "open_endpoint_inaccessible",
                            e,
                            f"finite open endpoint accessible: ∫|{e:g} - x| m(dx) = {val:.6g} < inf",
                        )
                    )

    # local finiteness on compact pieces of the interior
    for i, p in enumerate(pieces):
        lo = p.lo if not math.isinf(p.lo) else p.hi - 1.0
        hi = p.hi if not math.isinf(p.hi) else p.lo + 1.0
        inner_lo = lo if lo > J.left or J.left_closed else lo + (hi - lo) * 1e-3
        inner_hi = hi if hi < J.right or J.right_closed else hi - (hi - lo) * 1e-3
        try:
            val = p.integrate((1.0,), 0.0, inner_lo, inner_hi)
        except ValueError:
            val = math.inf
        if not math.isfinite(val):
            if not any(v.invariant == "locally_finite" for v in out):
                out.append(Violation("locally_finite", p.lo, f"piece {i} has infinite mass on a compact set"))
    return out
