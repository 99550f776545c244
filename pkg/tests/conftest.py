import pytest

from sfwr.line import Reflector, default_profile
from sfwr.repro import reference_table, run_scenario, study_plan


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def plan():
    return study_plan()


@pytest.fixture(scope="session")
def ref_prop(profile, plan):
    """Propagation table from the simulated 50 m open reference."""
    return reference_table(profile, plan)


@pytest.fixture(scope="session")
def open50_estimate(profile, plan):
    """FRF estimate of the 50 m open reference run."""
    return run_scenario(profile, plan, Reflector.open_termination(), 50.0)
