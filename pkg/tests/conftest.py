"""Shared fixtures: small worlds and a synthetic scan model."""

import numpy as np
import pytest

from riskdrive.config import RunConfig, ScenarioConfig
from riskdrive.risk import fit_ood_model
from riskdrive.world import Observation, reset_episode


@pytest.fixture
def cfg() -> RunConfig:
    return RunConfig().validate()


@pytest.fixture
def straight_world(cfg):
    """Ego at the start of an empty 200 m straight lane."""
    return reset_episode(0, cfg.scenario, cfg.vehicle, cfg.lidar)


@pytest.fixture
def open_world(cfg):
    """Straight route with a lane so wide no edge is in lidar range."""
    scn = ScenarioConfig(route_kind="straight", lane_width_m=200.0)
    return reset_episode(0, scn, cfg.vehicle, cfg.lidar)


def make_observation(speed=0.0, lidar=None, d=1e6, v=0.1,
                     k_plan=0.0, k_exec=0.0) -> Observation:
    if lidar is None:
        lidar = np.full(72, 60.0)
    return Observation(
        ego_kinematics=(speed, 0.0, 0.0, 0.0),
        lidar=np.asarray(lidar, float),
        lane_features=(0.0, 0.0, 0.0, 100.0),
        diagnostics=(k_plan, k_exec, d, v),
    )


@pytest.fixture(scope="session")
def synthetic_ood_model():
    """OOD model fit on well-conditioned synthetic clean scans."""
    rng = np.random.default_rng(7)
    scans = 50.0 + rng.normal(0.0, 2.0, size=(400, 72))
    return fit_ood_model(scans)
