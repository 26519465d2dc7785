"""Shared fixtures and the acceptance-summary reporting hook."""

import numpy as np
import pytest

from gridshield.cases import load_case
from gridshield.grid_model import build_laplacian, build_measurement_model
from gridshield.gsp import eig_sym

# One pass/fail line per acceptance criterion, echoed after the test run so
# the verdicts are visible even with captured output.
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    verdict = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number:02d}: {verdict} — {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def path3_case():
    return load_case("path3")


@pytest.fixture(scope="session")
def test6_case():
    return load_case("test6")


@pytest.fixture(scope="session")
def ieee57_case():
    return load_case("ieee57")


@pytest.fixture(scope="session")
def path3_L(path3_case):
    return build_laplacian(path3_case)


@pytest.fixture(scope="session")
def path3_model(path3_case):
    return build_measurement_model(path3_case)


@pytest.fixture(scope="session")
def path3_basis(path3_L):
    return eig_sym(path3_L)


@pytest.fixture(scope="session")
def test6_L(test6_case):
    return build_laplacian(test6_case)


@pytest.fixture(scope="session")
def test6_model(test6_case):
    return build_measurement_model(test6_case)


@pytest.fixture(scope="session")
def ieee57_L(ieee57_case):
    return build_laplacian(ieee57_case)


@pytest.fixture(scope="session")
def ieee57_model(ieee57_case):
    return build_measurement_model(ieee57_case)


@pytest.fixture(scope="session")
def ieee57_basis(ieee57_L):
    return eig_sym(ieee57_L)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
