import pytest

from flexlink.beam import NOMINAL_BEAM, NOMINAL_OVERRIDES
from flexlink.config import default_scenario_path, load_scenario, prepare
from flexlink.sim import build_systems, run_scenario


@pytest.fixture(scope="session")
def loaded():
    """The bundled default scenario, validated."""
    return prepare(load_scenario(default_scenario_path()))


@pytest.fixture(scope="session")
def systems(loaded):
    return loaded.systems


@pytest.fixture(scope="session")
def systems1():
    """Design model used as truth (one flexible mode)."""
    return build_systems(NOMINAL_BEAM, NOMINAL_OVERRIDES, truth_modes=1)


@pytest.fixture(scope="session")
def default_trace(loaded):
    sc = loaded.scenario
    return run_scenario(sc.sim, loaded.systems, sc.controller, loaded.observer)
