import pytest

import weighted_kelly as wk
from weighted_kelly import _accel

BACKENDS = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])

_acceptance_lines = []


def record_criterion(number, title, passed, detail=""):
    _acceptance_lines.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
                             + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def binary():
    return wk.build_discrete_market([1.0, -1.0], [0.6, 0.4], [1.0, 1.0], [0.5, 0.5])


@pytest.fixture
def fair_coin():
    return wk.build_discrete_market([1.0, -1.0], [0.5, 0.5], [1.0, 1.0], [0.5, 0.5])


@pytest.fixture
def skewed():
    return wk.build_discrete_market([1.0, -2.0], [0.7, 0.3])


@pytest.fixture
def ternary():
    return wk.build_discrete_market([2.0, -1.0, -1.0], [0.4, 0.3, 0.3], repeated_returns=True)


@pytest.fixture
def gauss_market():
    g = wk.construct_return_gaussian([[1.0]], [[2.0]], 0.5)
    return wk.build_gaussian_market(1, [[1.0]], [[2.0]], None, g)
