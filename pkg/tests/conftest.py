import numpy as np
import pytest

from dkp.evolve import FlowSpec, evolve
from dkp.grid import GaussianProduct, Profile, make_grid, p_grid, sample_initial

from helpers import ACCEPTANCE_LINES, REFERENCE_DT, REFERENCE_T_END


@pytest.fixture(scope="session")
def ref_grid():
    return make_grid(-12, 12, 256, -12, 12, 256)


@pytest.fixture(scope="session")
def ref_field(ref_grid):
    return sample_initial(GaussianProduct(-0.5), ref_grid)


@pytest.fixture(scope="session")
def slice_grid():
    return p_grid(-12, 12, 256)


@pytest.fixture(scope="session")
def gaussian(slice_grid):
    return Profile(slice_grid, np.exp(-slice_grid.p**2))


@pytest.fixture(scope="session")
def ref_slice(slice_grid):
    return Profile(slice_grid, -0.5 * np.exp(-slice_grid.p**2))


@pytest.fixture(scope="session")
def reference_run(ref_field):
    """Benney flow to t = 0.5 with dt = 1/512, monitored at every step."""
    return evolve(ref_field, FlowSpec.benney(), REFERENCE_T_END, REFERENCE_DT, monitor_every=1)


@pytest.fixture(scope="session")
def richardson_finals(ref_field):
    """Benney states at t = 0.25 for dt = 1/256, 1/512, 1/1024."""
    out = {}
    for n in (64, 128, 256):
        traj = evolve(ref_field, FlowSpec.benney(), 0.25, 0.25 / n, monitor_every=n, densities=(), snapshot_every=n)
        out[n] = traj.snapshots[-1].values
    return out


@pytest.fixture(scope="session")
def second_run(ref_field):
    """Short Second-flow run monitored at every step of dt = 1/4096."""
    return evolve(ref_field, FlowSpec.second(), 1.0 / 64, 1.0 / 4096, monitor_every=1, densities=())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
