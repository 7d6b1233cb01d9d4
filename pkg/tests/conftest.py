import numpy as np
import pytest

from spinelab.bolza import bolza_point, bolza_systoles, six_curve_critical_point, six_curve_system


@pytest.fixture(scope="session")
def bolza():
    return bolza_point()


@pytest.fixture(scope="session")
def p6():
    return six_curve_critical_point()


@pytest.fixture(scope="session")
def six():
    return six_curve_system()


@pytest.fixture(scope="session")
def twelve():
    return bolza_systoles()


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


# one verdict line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        terminalreporter.write_line(ACCEPTANCE[key])
