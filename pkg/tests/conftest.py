import json
import os

import pytest
from hypothesis import HealthCheck, settings

from mixlab.dual_profiles import build_duals
from mixlab.grid_core import make_grid

settings.register_profile("mixlab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("mixlab")

HERE = os.path.dirname(__file__)


@pytest.fixture(scope="session")
def frozen():
    with open(os.path.join(HERE, "oracles", "frozen.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def grid_small():
    return make_grid(33, 65, 8.0)


@pytest.fixture(scope="session")
def grid_mid():
    return make_grid(65, 129, 8.0)


@pytest.fixture(scope="session")
def grid_default():
    return make_grid(129, 257, 8.0)


@pytest.fixture(scope="session")
def duals_mid(grid_mid):
    return build_duals(grid_mid, k_max=3)


@pytest.fixture(scope="session")
def duals_default(grid_default):
    return build_duals(grid_default, k_max=3)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
