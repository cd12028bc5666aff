import pytest

from fedosov import TruncationPolicy, chart_from_potential
from fedosov.weyl import FlatMetric


@pytest.fixture(scope="session")
def flat1():
    return chart_from_potential("flat", 1)


@pytest.fixture(scope="session")
def fs1():
    return chart_from_potential("fubini_study", 1, 8)


@pytest.fixture(scope="session")
def disc1():
    return chart_from_potential("hyperbolic_disc", 1, 8)


@pytest.fixture(scope="session")
def flat_metric1():
    return FlatMetric(1)


@pytest.fixture(scope="session")
def policy2():
    return TruncationPolicy(2, 8)


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} {detail}")
