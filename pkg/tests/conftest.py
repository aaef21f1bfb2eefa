import time

import pytest

from fluxbranch.assembly import Discretization
from fluxbranch.continuation import ContinuationOptions, trace_branch
from fluxbranch.mesh import generate_disk_mesh
from fluxbranch.nonlinearity import parse_nonlinearity
from fluxbranch.steklov import solve_steklov_first

# nonlinearities with a branch from the trivial solution, and pure powers
CORPUS_FROM_ZERO = ["s + s^2", "s - s^2 + s^3", "s + s^3", "2*s + s^2"]
CORPUS_POWERS = ["s^2", "s^3"]
CORPUS = CORPUS_FROM_ZERO + CORPUS_POWERS

# lines printed at the end of the run by the acceptance suite
ACCEPTANCE_LINES = []
_START = time.perf_counter()


@pytest.fixture(scope="session")
def disc4():
    return Discretization(generate_disk_mesh(1.0, 4))


@pytest.fixture(scope="session")
def steklov4(disc4):
    return solve_steklov_first(disc4.A, disc4.B)


@pytest.fixture(scope="session")
def disc2():
    return Discretization(generate_disk_mesh(1.0, 2))


def branch_options(f, steklov):
    """Branches from zero run down to λ = 1e-7 λ* so that the blow-up tail is long."""
    if f.slope_at_zero > 0:
        return ContinuationOptions(lambda_min=1e-7 * steklov.mu1 / f.slope_at_zero)
    return ContinuationOptions()


@pytest.fixture(scope="session")
def branch(disc4, steklov4):
    """Traced diagram on the level-4 disk, computed once per nonlinearity."""
    cache = {}

    def get(text):
        if text not in cache:
            f = parse_nonlinearity(text)
            cache[text] = trace_branch(disc4, f, steklov4, branch_options(f, steklov4))
        return cache[text]

    return get


SUITE_TIME_LIMIT = 300.0


def pytest_terminal_summary(terminalreporter):
    elapsed = time.perf_counter() - _START
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        verdict = "PASS" if elapsed <= SUITE_TIME_LIMIT else "FAIL"
        terminalreporter.write_line(
            f"{verdict} criterion 12 suite runtime: {elapsed:.1f} s (<= {SUITE_TIME_LIMIT:.0f} s)"
        )
    else:
        terminalreporter.write_line(f"total wall time {elapsed:.1f} s")
