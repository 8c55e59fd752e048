"""
Shared fixtures for the coverage engine tests
"""
import pytest

from models.coverage_models import RoomGeometry, SystemParams
from services.scenario_service import ScenarioService


# UE placements: center, near center and corner
PLACEMENTS = [(0.5, 0.5), (0.2, 0.2), (1 / 20, 1 / 15)]


@pytest.fixture(scope='session')
def scenario_service():
    return ScenarioService()


@pytest.fixture(scope='session')
def default_scenario(scenario_service):
    return scenario_service.build(scenario_service.default_parameters())


@pytest.fixture(scope='session')
def light_scenario(scenario_service):
    """Smaller room and a short FTR series, for checks that evaluate many Laplace terms"""
    params = scenario_service.merge(scenario_service.default_parameters(),
                                    {'r_x': 10.0, 'r_y': 7.5, 'big_k': 1.0})
    return scenario_service.build(params)


@pytest.fixture
def center_room():
    return RoomGeometry(r_x=20.0, r_y=15.0)


@pytest.fixture
def corner_room():
    return RoomGeometry(r_x=20.0, r_y=15.0, delta_x=1 / 20, delta_y=1 / 15)


@pytest.fixture
def system():
    return SystemParams()
