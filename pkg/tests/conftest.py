import warnings

import numpy as np
import pytest

from elastocauchy.geometry import MaterialParams, circle, kite, radial

EX2_RADIUS = "(0.9 + 0.6*cos(s) - 0.2*sin(2*s)) / (2 + 1.4*cos(s))"

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(autouse=True)
def _quiet_runtime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture(scope="session")
def params_ex3():
    return MaterialParams(2.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def params_ex1():
    return MaterialParams(3.0, 2.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def curves():
    return {"kite": kite(), "circle": circle((0.0, 0.0), 2.0), "radial": radial(EX2_RADIUS)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
