import pytest

from hproj import ConformalMetric, LinePencil

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance summary."""

    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def flat():
    return ConformalMetric.euclidean()


@pytest.fixture(scope="session")
def curved():
    return ConformalMetric.radial_quadratic()


@pytest.fixture(scope="session")
def flat_pencil(flat):
    return LinePencil(flat)


@pytest.fixture(scope="session")
def curved_pencil(curved):
    return LinePencil(curved)
