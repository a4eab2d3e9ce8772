import pytest

from hardyscope import domain as dm
from hardyscope.manifold import ManifoldModel


@pytest.fixture(scope="session")
def poincare():
    return ManifoldModel.poincare()


@pytest.fixture(scope="session")
def unit_disk():
    return dm.disk()


@pytest.fixture(scope="session")
def triangle():
    return dm.ideal_triangle(ManifoldModel.poincare())


def rel(a, b):
    return abs(a - b) / abs(b)



def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
