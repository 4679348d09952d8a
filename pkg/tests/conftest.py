import numpy as np
import pytest

from dysonmaps.coefficient_functions import from_name
from dysonmaps.operator_algebra import build_fock_rep_1mode, build_fock_rep_2mode

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rep2():
    return build_fock_rep_2mode(12, 3)


@pytest.fixture(scope="session")
def rep16():
    return build_fock_rep_2mode(16, 4)


@pytest.fixture(scope="session")
def rep1():
    return build_fock_rep_1mode(48, 10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def lam():
    return from_name("sin2t")


@pytest.fixture(scope="session")
def cost():
    return from_name("cost")
