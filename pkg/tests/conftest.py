import numpy as np
import pytest

from sparfilter.covariance import DataMatrix, SymMatrix
from sparfilter.sim import load_fixture

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def appendix_sigma() -> SymMatrix:
    return load_fixture("appendix-a")


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")

    return record


def random_data(rng, n, p, labels=None) -> DataMatrix:
    return DataMatrix(rng.standard_normal((n, p)), labels or ())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
