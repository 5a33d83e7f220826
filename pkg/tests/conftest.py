import numpy as np
import pytest

from resource_games.freesets import FreeMeasurementSet, FreeStateSet
from resource_games.linalg import Povm, computational_povm, projector


@pytest.fixture
def plus():
    return projector(np.array([1.0, 1.0]))


@pytest.fixture
def mixed_coherent():
    return np.array([[0.5, 0.25], [0.25, 0.5]], dtype=complex)


@pytest.fixture
def proj():
    return computational_povm(2)


@pytest.fixture
def noisy():
    return Povm(np.stack([np.diag([0.75, 0.25]), np.diag([0.25, 0.75])]).astype(complex))


@pytest.fixture
def inc2():
    return FreeStateSet("incoherent", 2)


@pytest.fixture
def triv2():
    return FreeMeasurementSet("trivial", 2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
