"""Shared fixtures: the 3x5 reference instance and hand-built small factories."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.factory import FactoryConfig, load_instance  # noqa: E402

INSTANCE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "instances")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long experiment, run with GALBP_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("GALBP_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set GALBP_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def make_config(durations, occupancy=None, precedence=None, needs=None, inventories=None,
                horizon=20, deadlines=None, buffers=None, returnable=False,
                name="tiny") -> FactoryConfig:
    """Small instance with generous defaults: one resource, no precedences."""
    durations = np.asarray(durations)
    n_i, n_j = durations.shape
    needs = np.ones((n_j, 1), dtype=int) if needs is None else np.asarray(needs)
    n_r = needs.shape[1]
    return FactoryConfig(
        horizon=horizon,
        occupancy_caps=np.ones(n_i, dtype=int) if occupancy is None else occupancy,
        buffer_caps=np.full((n_i, n_r), 100) if buffers is None else buffers,
        durations=durations,
        deadlines=np.full(n_j, horizon) if deadlines is None else deadlines,
        precedence=np.zeros((n_j, n_j), dtype=int) if precedence is None else precedence,
        resource_needs=needs,
        inventories=np.full(n_r, 100) if inventories is None else inventories,
        returnable_resources=returnable,
        name=name,
    )


@pytest.fixture(scope="session")
def ws3_tasks5():
    return load_instance(os.path.join(INSTANCE_DIR, "ws3_tasks5.json"))


@pytest.fixture
def single_task():
    """One workstation, one task of duration 3."""
    return make_config([[3]], horizon=10, name="single_task")


@pytest.fixture
def chain():
    """One workstation (cap 1), task 1 must finish before task 2, both duration 2."""
    return make_config([[2, 2]], precedence=[[0, 1], [-1, 0]], horizon=10, name="chain")
