import pytest

from cmcfoliation.radial_metric import build_profile
from cmcfoliation.reeb_foliation import build_enlarged_reeb
from cmcfoliation.torus2d import build_model


@pytest.fixture(scope="session")
def profile():
    return build_profile()


@pytest.fixture(scope="session")
def profile4():
    return build_profile(n=4, H=1.5)


@pytest.fixture(scope="session")
def component(profile):
    return build_enlarged_reeb(profile=profile, lam=1.0, seed=0)


@pytest.fixture(scope="session")
def torus_models():
    return {nx: build_model(Nx=nx) for nx in (128, 256, 512)}


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance lines recorded by ``test_acceptance.py``."""
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
