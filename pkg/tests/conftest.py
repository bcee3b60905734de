import numpy as np
import pytest

from ifpt.barrier import IfptProblem, solve_barrier
from ifpt.kernel import build_fejer
from ifpt.spectral import make_grid
from ifpt.survival import GaussianDensity, make_exponential

L = 16.0


def reduced_problem(sigma=0.25, nu=0.25, T=8.0, dt=1 / 64, N=1024, order=64, lam=1.0, **kw):
    """The reduced-scale configuration used throughout the tests."""
    grid = make_grid(N, L)
    return IfptProblem(survival=make_exponential(nu), density=GaussianDensity(0.0, sigma),
                       lam=lam, kernel=build_fejer(order, L), grid=grid, dt=dt, T=T, **kw)


@pytest.fixture(scope="session")
def base_problem():
    return reduced_problem()


@pytest.fixture(scope="session")
def base_solution(base_problem):
    return solve_barrier(base_problem)


@pytest.fixture(scope="session")
def short_problem():
    return reduced_problem(T=2.0)


@pytest.fixture(scope="session")
def short_solution(short_problem):
    return solve_barrier(short_problem)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


#: (criterion, passed, detail) rows filled by the acceptance tests
ACCEPTANCE = []


def record(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE.append((number, passed, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
