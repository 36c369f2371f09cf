import numpy as np
import pytest

from vadg.field import ElectricField, NodalField, SpeciesGrid, State
from vadg.physics import Domain, PlasmaParams, landau_ic


def small_grids(nx=4, nve=8, nvi=6, k=2, L=4 * np.pi, vce=6.0, vci=0.4, mass_ratio=25.0):
    ge = SpeciesGrid.build("e", -1.0, L, nx, vce, nve, k)
    gi = SpeciesGrid.build("i", 1.0 / mass_ratio, L, nx, vci, nvi, k)
    gi = SpeciesGrid("i", gi.mu, ge.xmesh, gi.vmesh, ge.basis)
    return ge, gi


def random_state(seed=0, **kw):
    ge, gi = small_grids(**kw)
    rng = np.random.default_rng(seed)
    fe = NodalField(ge, rng.uniform(0.1, 1.0, ge.shape))
    fi = NodalField(gi, rng.uniform(0.1, 1.0, gi.shape))
    E = ElectricField(ge.xmesh, ge.basis, 0.3 * rng.standard_normal(ge.shape[0]))
    return State(fe, fi, E)


@pytest.fixture
def landau_small():
    params = PlasmaParams(25.0, 2.0)
    dom = Domain(4 * np.pi, 12, 12.0, 48, 12.0 * np.sqrt(params.ion_var), 48)
    return landau_ic(params, 0.5, 0.5, dom, 2)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """``record(n, name, ok, detail)`` logs one criterion line and asserts ``ok``."""
    def record(n, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {name} ({detail})"
        request.config.stash[ACCEPTANCE_KEY].append((n, line))
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
