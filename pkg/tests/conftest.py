import math
import time

import pytest

from wavefront import EmitterParams
from wavefront import oracle

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption(
        "--update-golden",
        action="store_true",
        default=False,
        help="rewrite tests/golden/* from the current CLI output",
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line[1])


@pytest.fixture
def update_golden(request):
    return request.config.getoption("--update-golden")


@pytest.fixture(scope="session")
def params():
    return EmitterParams(omega0=100.0, gamma=1.0, c=1.0)


@pytest.fixture(scope="session")
def default_run(params):
    """Default-grid oracle snapshots at gamma t = 5, 10, 20 plus the wall time to reach 10."""
    grid = oracle.default_grid(params)
    start = time.perf_counter()
    s5 = oracle.integrate(params, grid, 5.0)
    s10 = oracle.resume(s5, 10.0)
    elapsed10 = time.perf_counter() - start
    s20 = oracle.resume(s10, 20.0)
    return {5: s5, 10: s10, 20: s20, "elapsed10": elapsed10}


@pytest.fixture(scope="session")
def wide_run(params):
    """Grid reaching down to negative frequencies, for the spurious-mode mass."""
    grid = oracle.GridSpec.around(params.k0, 150.0, 2**14, 6e-4)
    return oracle.integrate(params, grid, 5.0)


def record_acceptance(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number:2d}: {name} -- {detail}"))
    return ok


def tight_grid(span=50.0, n=2**13, dt=1e-3, center=0.0):
    return oracle.GridSpec.around(center, span, n, dt)


LN2 = math.log(2)
