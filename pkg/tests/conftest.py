import numpy as np
import pytest

from mobwass import ActionDensity, Grid, GridMeasure, MobilitySpec, ReferenceMeasure


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quad_phi():
    return ActionDensity(2.0, MobilitySpec.quadratic())


def line_reference(n: int, lo: float = 0.0, hi: float = 1.0) -> ReferenceMeasure:
    return ReferenceMeasure.lebesgue(Grid.uniform(lo, hi, n))


def measure(ref: ReferenceMeasure, values) -> GridMeasure:
    return GridMeasure(ref, np.asarray(values, dtype=float))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion (echoed in the terminal summary)."""
    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
