import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from ermakov_lab.classical import integrate_tdho  # noqa: E402
from ermakov_lab.profiles import FrequencyProfile  # noqa: E402
from ermakov_lab.quantum import build_fock  # noqa: E402

settings.register_profile("repo", deadline=None, max_examples=40)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def sweep_profile():
    return FrequencyProfile(kind="tanh_sweep", omega_start=1.0, omega_end=2.0,
                            t_min=0.0, t_max=100.0, duration=50.0)


@pytest.fixture(scope="session")
def sweep_traj(sweep_profile):
    return integrate_tdho(sweep_profile)


@pytest.fixture(scope="session")
def constant_profile():
    return FrequencyProfile(kind="constant", omega_start=1.0, t_min=0.0, t_max=20.0)


@pytest.fixture(scope="session")
def constant_traj(constant_profile):
    return integrate_tdho(constant_profile, method="analytic")


@pytest.fixture(scope="session")
def space64():
    return build_fock(64)


@pytest.fixture(scope="session")
def space128():
    return build_fock(128)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
