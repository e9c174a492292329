import pytest

from multistep_mle.models import make_model
from multistep_mle.simulate import simulate_path


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def quartic():
    return make_model("quartic")


@pytest.fixture(scope="session")
def quartic2d():
    return make_model("quartic2d")


@pytest.fixture(scope="session")
def ou():
    return make_model("ou")


@pytest.fixture(scope="session")
def ou_path(ou):
    return simulate_path(ou, [1.0], T=200.0, h=0.01, seed=11)


@pytest.fixture(scope="session")
def quartic_path(quartic):
    return simulate_path(quartic, [1.0], T=300.0, h=0.01, seed=5)
