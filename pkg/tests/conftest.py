import sys
from fractions import Fraction

import pytest

from mtm.traces import Point, build_model


@pytest.fixture
def cycle():
    return build_model([(0, 1), (1, 0)], [Point(0, None, "a"), Point(1, None, "b")])


def frac_rows(rows):
    return [[Fraction(x) for x in r] for r in rows]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
