from fractions import Fraction

import pytest
from hypothesis import settings

from fairsched.core import TemporalDemand, enumerate_virtual_users

settings.register_profile("default", deadline=None)
settings.load_profile("default")

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def record(name: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        _LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def toy():
    """Two users, one active per slot, rates (idle, u1, u2) = (0, 1, 2), shares in [1/4, 3/4]."""
    catalog = enumerate_virtual_users(2, 1)
    demand = TemporalDemand.uniform(2, Fraction(1, 4), Fraction(3, 4))
    return catalog, demand, [0, 1, 2]
