"""Write the example measures used by the end-to-end tests to ``fixtures/``.

Each file is a measure in the JSON schema; ``manifest.json`` lists the
expected ``validate`` violations and ``classify`` output per file.
Run from the repository root: ``python scripts/make_fixtures.py``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from speedmeasure.classify import classify
from speedmeasure.fixtures import (
    HALF_LINE,
    REAL_LINE,
    UNIT,
    cubic_tail,
    exponential_boundary,
    normal_spike,
    sticky_point_sequence,
)
from speedmeasure.measures import Atom, DensityPiece, Interval, SpeedMeasure, validate

OUT = Path(__file__).resolve().parents[1] / "fixtures"

OPEN_UNIT = Interval.open(0.0, 1.0)


def measures() -> dict[str, SpeedMeasure]:
    two = SpeedMeasure.lebesgue(UNIT, 2.0)
    out = {
        "good": two,
        "open_accessible": SpeedMeasure.lebesgue(OPEN_UNIT, 2.0),
        "duplicate_atoms": SpeedMeasure(UNIT, (DensityPiece(0.0, 1.0, (2.0,)),),
                                        (Atom(0.5, 1.0), Atom(0.5, 1.0)), 0.0, 0.0),
        "atom_three": SpeedMeasure(UNIT, (DensityPiece(0.0, 1.0, (1.0,)),), (Atom(0.5, 3.0),), 0.0, 0.0),
        "density_x": SpeedMeasure(Interval.closed(0.0, 2.0), (DensityPiece(0.0, 2.0, (0.0, 1.0)),), (), 0.0, 0.0),
        "sticky_point": two.with_atoms(Atom(0.5, 1.0)),
        "absorbing_left": two.replace(left_boundary_weight=math.inf),
        "sticky_left_3": two.replace(left_boundary_weight=3.0),
        "half_line": SpeedMeasure.lebesgue(HALF_LINE, 2.0),
        "half_line_sticky": SpeedMeasure.lebesgue(HALF_LINE, 2.0, left_boundary_weight=0.5),
        "half_line_absorbing": SpeedMeasure.lebesgue(HALF_LINE, 2.0, left_boundary_weight=math.inf),
        "half_line_very_sticky": SpeedMeasure.lebesgue(HALF_LINE, 2.0, left_boundary_weight=5.0),
        "lebesgue_line": SpeedMeasure.lebesgue(REAL_LINE, 1.0),
        "two_lebesgue_line": SpeedMeasure.lebesgue(REAL_LINE, 2.0),
        "four_lebesgue_line": SpeedMeasure.lebesgue(REAL_LINE, 4.0),
        "eight_lebesgue_unit": SpeedMeasure.lebesgue(UNIT, 8.0),
        "line_with_atom": SpeedMeasure.lebesgue(REAL_LINE, 1.0, atoms=(Atom(0.0, 1.0),)),
        "cubic_tail": cubic_tail(),
        "exp_boundary_n10": exponential_boundary(10.0),
        "exp_boundary_limit": SpeedMeasure.lebesgue(HALF_LINE, 1.0, left_boundary_weight=1.0),
        "normal_spike_n100": normal_spike(100.0),
    }
    seq = sticky_point_sequence()
    for n, m in seq:
        out[f"sticky_n{n}"] = m
    out["sticky_limit"] = seq.limit
    return out


def main() -> None:
    OUT.mkdir(exist_ok=True)
    manifest = {}
    for name, m in sorted(measures().items()):
        (OUT / f"{name}.json").write_text(m.to_json() + "\n")
        manifest[name] = {
            "violations": sorted({v.invariant for v in validate(m)}),
            "classify": classify(m),
        }
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
