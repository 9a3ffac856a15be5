from pathlib import Path

import pytest

from speedmeasure import Atom, SpeedMeasure
from speedmeasure.fixtures import UNIT

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture
def two_leb():
    return SpeedMeasure.lebesgue(UNIT, 2.0)


@pytest.fixture
def sticky_half(two_leb):
    return two_leb.with_atoms(Atom(0.5, 1.0))


ACCEPTANCE_LINES = []


def record_criterion(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
