from typing import List

import pytest

from scenegraph.config import BuilderConfig
from scenegraph.schemas import Scenario
from scenegraph.services import generate_synthetic

from .factories import lane, make_scenario, vehicle


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance runs (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def two_cars() -> Scenario:
    """Two vehicles 8 m apart driving along +x for three timesteps, no map."""
    return make_scenario(
        [
            vehicle("a", [[t, 2.0 * t, 0.0, 0.0, 4.0, 0.0, 4.5, 2.0] for t in range(3)], is_ego=True),
            vehicle("b", [[t, 8.0 + 2.0 * t, 0.0, 0.0, 4.0, 0.0, 4.5, 2.0] for t in range(3)]),
        ],
        num_timesteps=3,
        scenario_id="two_cars",
        labels=["following_lane"],
    )


@pytest.fixture
def road_scene() -> Scenario:
    """Two cars on one lane next to a crossing walkway and a far-away lane."""
    return make_scenario(
        [
            vehicle("a", [[t, -10.0 + 4.0 * t, 0.0, 0.0, 8.0, 0.0, 4.5, 2.0] for t in range(4)], is_ego=True),
            vehicle("b", [[t, 4.0 * t, 0.5, 0.0, 8.0, 0.0, 4.5, 2.0] for t in range(4)]),
            vehicle("p", [[t, 6.0, -8.0 + t, 1.5707963267948966, 0.0, 2.0, 0.5, 0.5] for t in range(4)], type="pedestrian"),
        ],
        num_timesteps=4,
        scenario_id="road_scene",
        road_segments=[
            lane("lane_main", [[-50.0, 0.0], [50.0, 0.0]], connections=[["lane_next", "successor"]]),
            lane("lane_next", [[50.0, 0.0], [100.0, 0.0]]),
            lane("walk", [[6.0, -20.0], [6.0, 20.0]], width=3.0, type="walkway"),
            lane("far_away", [[5000.0, 5000.0], [5100.0, 5000.0]]),
        ],
        labels=["following_lane", "near_pedestrian_on_crosswalk"],
    )


@pytest.fixture(scope="session")
def builder_config() -> BuilderConfig:
    return BuilderConfig()


@pytest.fixture(scope="session")
def synthetic_scenarios() -> List[Scenario]:
    """Two scenarios of every family at the default location."""
    families = ["straight_high_speed", "left_turn", "right_turn", "stop_at_light", "overtake", "pedestrian_crossing"]
    return [s for family in families for s in generate_synthetic(family, 2, seed=11)]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run inside an empty directory so no scenegraph.toml or .env leaks in."""
    monkeypatch.chdir(tmp_path)
    for name in ("SCENEGRAPH_SEED", "SCENEGRAPH_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    return tmp_path
