"""Random factory instances with guaranteed-valid structure."""

import logging
from typing import Optional, Sequence

import numpy as np

from .config import FactoryConfig, RewardConfig

logger = logging.getLogger(__name__)


def generate_instance(num_workstations: int, num_tasks: int, num_resources: int = 2,
                      seed: int = 0, horizon: Optional[int] = None,
                      max_occupancy: int = 3, duration_range: Sequence[int] = (2, 12),
                      need_range: Sequence[int] = (1, 15), edge_probability: float = 0.2,
                      returnable_resources: bool = False,
                      name: Optional[str] = None) -> FactoryConfig:
    """Draw a random instance.

    Precedence edges only point from lower to higher task index, so the graph
    is acyclic by construction. Inventories cover every task's needs and each
    buffer can hold any single task, so every task is individually runnable.
    """
    rng = np.random.default_rng(seed)
    lo, hi = duration_range
    durations = rng.integers(lo, hi + 1, size=(num_workstations, num_tasks))
    occupancy = rng.integers(1, max(1, min(max_occupancy, num_tasks)) + 1, size=num_workstations)
    needs = rng.integers(need_range[0], need_range[1] + 1, size=(num_tasks, num_resources))

    precedence = np.zeros((num_tasks, num_tasks), dtype=np.int64)
    for j1 in range(num_tasks):
        for j2 in range(j1 + 1, num_tasks):
            if rng.random() < edge_probability:
                precedence[j1, j2] = 1
                precedence[j2, j1] = -1

    task_peak = needs.max(axis=0) if num_tasks else np.zeros(num_resources, dtype=np.int64)
    buffers = np.tile(task_peak * max_occupancy, (num_workstations, 1))
    inventories = needs.sum(axis=0)

    if horizon is None:
        # Serial execution on the slowest workstation always fits.
        horizon = int(durations.max(axis=0).sum() + num_tasks + 1)
    deadlines = np.full(num_tasks, horizon, dtype=np.int64)

    config = FactoryConfig(
        horizon=horizon,
        occupancy_caps=occupancy,
        buffer_caps=buffers,
        durations=durations,
        deadlines=deadlines,
        precedence=precedence,
        resource_needs=needs,
        inventories=inventories,
        returnable_resources=returnable_resources,
        reward=RewardConfig(),
        name=name or f"random_{num_workstations}x{num_tasks}_s{seed}",
    )
    logger.debug(f"Generated instance {config.name}")
    return config
