import numpy as np
import pytest

from nvneumann import geometry
from nvneumann.quadrature import Discretization
from nvneumann.workspace import Workspace

# small resolution for unit tests; the acceptance suite uses the defaults
SMALL = Discretization(N=128, M_r=32, M_t=64, K=8)


@pytest.fixture(scope="session")
def unit_disk():
    return geometry.build_domain([geometry.Circle((0.0, 0.0), 1.0)])


@pytest.fixture(scope="session")
def ellipse():
    return geometry.build_domain([geometry.Ellipse((0.0, 0.0), 2.0, 1.0)])


@pytest.fixture(scope="session")
def two_disks():
    return geometry.build_domain([geometry.Circle((-2.0, 0.0), 1.0), geometry.Circle((2.0, 0.0), 1.0)])


@pytest.fixture(scope="session")
def disk_ws(unit_disk):
    return Workspace(unit_disk, SMALL)


@pytest.fixture(scope="session")
def default_ws(unit_disk):
    return Workspace(unit_disk, Discretization())


@pytest.fixture(scope="session")
def two_disk_ws(two_disks):
    return Workspace(two_disks, Discretization(N=64, M_r=24, M_t=48, K=8))


def disk_points(n, seed, rmin=0.0, rmax=0.95):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(rmin**2, rmax**2, n))
    th = rng.uniform(0, 2 * np.pi, n)
    return np.c_[r * np.cos(th), r * np.sin(th)]


@pytest.fixture
def probes():
    return disk_points(25, seed=7)


@pytest.fixture(scope="session")
def sample_disk():
    return disk_points


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
