"""
Shared fixtures: small end-to-end pipelines built once per session
"""

import numpy as np
import pytest

from esrom.config import load_config
from esrom.pipeline import run_all


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def periodic_cfg():
    return load_config(
        preset="euler1d-periodic",
        overrides={"fom": {"k_cells": 100, "final_time": 0.2}, "basis": {"n_modes": 8}},
    )


@pytest.fixture(scope="session")
def periodic_run(periodic_cfg):
    """1D periodic Euler, eps = 0, full pipeline"""
    return run_all(periodic_cfg)


@pytest.fixture(scope="session")
def wall_cfg():
    return load_config(
        preset="euler1d-wall",
        overrides={"fom": {"k_cells": 100, "final_time": 0.1}, "basis": {"n_modes": 8, "subsample": 1}},
    )


@pytest.fixture(scope="session")
def wall_run(wall_cfg):
    """1D Euler with reflective walls and artificial viscosity, full pipeline"""
    return run_all(wall_cfg)
