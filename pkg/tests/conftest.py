import numpy as np
import pytest

from discrete_malliavin import kernels
from discrete_malliavin.space import RandomVariable, new_space


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_space(rng, N, low=0.05, high=0.95):
    return new_space(N, rng.uniform(low, high, size=N + 1))


def random_rv(rng, space, scale=1.0):
    return RandomVariable(space, scale * rng.normal(size=space.size))


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


# ---- acceptance reporting: one PASS/FAIL line per criterion in the summary

import time

_SESSION_START = [time.perf_counter()]
_ACCEPT_DETAIL: dict = {}
_ACCEPT_OUTCOME: dict = {}
RUNTIME_TEST = "test_criterion_12_suite_runtime"


def session_elapsed():
    return time.perf_counter() - _SESSION_START[0]


def pytest_sessionstart(session):
    _SESSION_START[0] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    last = [it for it in items if it.name == RUNTIME_TEST]
    items[:] = [it for it in items if it.name != RUNTIME_TEST] + last


@pytest.fixture
def accept(request):
    """Record a criterion's detail line and fail the test if ``ok`` is false."""

    def _accept(ok, detail):
        _ACCEPT_DETAIL[request.node.nodeid] = detail
        print(f"{'PASS' if ok else 'FAIL'} {request.node.name}: {detail}")
        assert ok, detail

    return _accept


def pytest_runtest_logreport(report):
    if "test_criterion_" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        _ACCEPT_OUTCOME[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT_OUTCOME:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _ACCEPT_OUTCOME.items():
        name = nodeid.split("::")[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status} {name}: {_ACCEPT_DETAIL.get(nodeid, outcome)}")
