import numpy as np
import pytest

from lamecontact.params import GridSpec, derive_constants


@pytest.fixture
def unit_params():
    return derive_constants(1.0, 1.0)


@pytest.fixture
def grid1d():
    return GridSpec.uniform(1, 2 * np.pi, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA_KEY] = []


@pytest.fixture
def record_criterion(request):
    """Record one pass/fail line for the terminal summary and echo it to stdout."""
    lines = request.config.stash[_CRITERIA_KEY]

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
