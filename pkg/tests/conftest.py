import numpy as np
import pytest

from ofbm.io import fixture_names, load_fixture

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fixtures():
    return {name: load_fixture(name) for name in fixture_names()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
