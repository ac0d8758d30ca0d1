import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from conorbit.models import build_model

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def mag():
    return build_model("torus_magnetic")


@pytest.fixture(scope="session")
def mech():
    return build_model("torus_mechanical", amplitude=0.7)


@pytest.fixture(scope="session")
def flat():
    return build_model("torus_mechanical", amplitude=0.0)


@pytest.fixture(scope="session")
def hyp():
    return build_model("half_plane_horocycle")


@pytest.fixture(scope="session")
def patch():
    return build_model("plane_patch_custom", B=1.0, omega=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
