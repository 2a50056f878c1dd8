"""Tabular reports: action-space sizes, growth with |J|, mask sweeps, convergence."""

import logging
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from src.actions.action_space import (
    SpaceShape,
    count_agent_space,
    count_occupancy_constrained,
    count_unconstrained,
    count_unique_assignment,
    enumerate_centralized,
)
from src.actions.mask import sweep_masks
from src.factory.config import FactoryConfig

logger = logging.getLogger(__name__)


def action_space_table(config: FactoryConfig) -> pd.DataFrame:
    """(formula, value) rows for the three centralized counts and every agent space."""
    rows = [
        ("unconstrained", count_unconstrained(config)),
        ("unique_assignment", count_unique_assignment(config)),
        ("occupancy_constrained", count_occupancy_constrained(config)),
    ]
    for i in range(config.num_workstations):
        rows.append((f"agent_{i + 1}", count_agent_space(config, i)))
    # object dtype keeps arbitrary-precision integers exact
    return pd.DataFrame(rows, columns=["formula", "value"]).astype({"value": object})


def growth_report(max_tasks: int, occupancy_profile: Sequence[int]) -> pd.DataFrame:
    """Centralized and per-agent action-space sizes for |J| = 1..max_tasks."""
    if max_tasks < 1:
        raise ValueError("max_tasks must be at least 1")
    caps = tuple(int(c) for c in occupancy_profile)
    if not caps or min(caps) < 1:
        raise ValueError("occupancy profile needs at least one positive cap")

    records = []
    for num_tasks in range(1, max_tasks + 1):
        shape = SpaceShape(caps, num_tasks)
        records.append({
            "num_tasks": num_tasks,
            "unconstrained": count_unconstrained(shape),
            "unique_assignment": count_unique_assignment(shape),
            "occupancy_constrained": count_occupancy_constrained(shape),
            "max_agent": max(count_agent_space(shape, i) for i in range(len(caps))),
        })
    return pd.DataFrame.from_records(records).astype(object)


def polynomial_degree(values: Sequence[int]) -> Optional[int]:
    """Degree of the lowest-degree polynomial through equally spaced samples.

    Repeated finite differences in exact integer arithmetic; None when the
    samples run out before a difference row vanishes.
    """
    row: List[int] = [int(v) for v in values]
    degree = 0
    while row:
        if all(v == 0 for v in row):
            return degree - 1 if degree else None
        if len(row) == 1:
            return None
        row = [b - a for a, b in zip(row, row[1:])]
        degree += 1
    return None


def mask_check(config: FactoryConfig, num_states: int, seed: int = 0) -> Dict[str, int]:
    space = enumerate_centralized(config)
    stats = sweep_masks(config, space, num_states, np.random.default_rng(seed))
    logger.info(f"Mask check on {config.name}: {stats['states']} states, "
                f"{stats['admitted']} admitted, {stats['rejected']} rejected, "
                f"{stats['discrepancies']} discrepancies")
    return stats


def convergence_comparison(runs: Mapping[str, Sequence[Optional[int]]]) -> pd.DataFrame:
    """One row per run with its converged seeds and median convergence episode.

    A seed that never converged counts as infinitely slow, so a finite median
    means more than half of the seeds converged. Rows are ordered fastest first.
    """
    rows = []
    for name, episodes in runs.items():
        if not episodes:
            raise ValueError(f"run {name!r} has no seeds")
        values = [np.inf if e is None else float(e) for e in episodes]
        rows.append({
            "run": name,
            "seeds": len(values),
            "converged": sum(1 for e in episodes if e is not None),
            "median_episode": float(np.median(values)),
            "first_episode": min(values),
        })
    frame = pd.DataFrame(rows, columns=["run", "seeds", "converged", "median_episode",
                                        "first_episode"])
    return frame.sort_values(["median_episode", "run"], kind="stable").reset_index(drop=True)
