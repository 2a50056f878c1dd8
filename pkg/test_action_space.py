"""Tests for action-space counting, enumeration and index codecs."""

import itertools

import numpy as np
import pytest

from src.actions import (
    ActionSpaceTooLarge,
    SpaceShape,
    count_agent_space,
    count_occupancy_constrained,
    count_unconstrained,
    count_unique_assignment,
    enumerate_agent,
    enumerate_agents,
    enumerate_centralized,
)
from src.actions.action_space import action_cap, concat_rows


def brute_force_count(shape: SpaceShape) -> int:
    """Count task -> (workstation or none) maps that respect every occupancy cap."""
    n_i = shape.num_workstations
    total = 0
    for choice in itertools.product(range(n_i + 1), repeat=shape.num_tasks):
        load = [0] * n_i
        for c in choice:
            if c < n_i:
                load[c] += 1
        if all(load[i] <= shape.occupancy_caps[i] for i in range(n_i)):
            total += 1
    return total


def test_reference_counts(ws3_tasks5):
    assert count_unconstrained(ws3_tasks5) == 32768
    assert count_unique_assignment(ws3_tasks5) == 1024
    assert count_occupancy_constrained(ws3_tasks5) == 336
    assert [count_agent_space(ws3_tasks5, i) for i in range(3)] == [6, 26, 6]


def test_nested_sum_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n_i = int(rng.integers(1, 5))
        n_j = int(rng.integers(1, 7))
        # caps from 0 (idle workstation) up to |J| (never binding)
        caps = tuple(int(c) for c in rng.integers(0, n_j + 1, size=n_i))
        shape = SpaceShape(caps, n_j)
        expected = brute_force_count(shape)
        assert count_occupancy_constrained(shape) == expected, shape
        if expected <= 5000:
            assert len(enumerate_centralized(shape)) == expected


@pytest.mark.parametrize("n_i,n_j", [(1, 1), (2, 3), (3, 5), (4, 4)])
def test_boundary_caps(n_i, n_j):
    idle = SpaceShape((0,) * n_i, n_j)
    assert count_occupancy_constrained(idle) == 1
    assert len(enumerate_centralized(idle)) == 1
    assert [count_agent_space(idle, i) for i in range(n_i)] == [1] * n_i

    full = SpaceShape((n_j,) * n_i, n_j)
    assert count_occupancy_constrained(full) == count_unique_assignment(full) == (n_i + 1) ** n_j
    assert [count_agent_space(full, i) for i in range(n_i)] == [2 ** n_j] * n_i

    mixed = SpaceShape((0,) * (n_i - 1) + (n_j,), n_j)
    assert count_occupancy_constrained(mixed) == 2 ** n_j == brute_force_count(mixed)


def test_single_task_edge_case():
    shape = SpaceShape((1, 3, 1), 1)
    assert count_unconstrained(shape) == 8
    assert count_unique_assignment(shape) == 4
    assert count_occupancy_constrained(shape) == 4
    assert [count_agent_space(shape, i) for i in range(3)] == [2, 2, 2]


def test_centralized_enumeration_order(ws3_tasks5):
    space = enumerate_centralized(ws3_tasks5)
    assert len(space) == 336
    assert space.decode(0).sum() == 0
    flat = [tuple(m.ravel()) for m in space.matrices]
    assert flat == sorted(flat)
    assert len(set(flat)) == len(flat)
    # every member is structurally valid
    assert (space.matrices.sum(axis=1) <= 1).all()
    assert (space.matrices.sum(axis=2) <= np.array([1, 3, 1])).all()


def test_centralized_codec(ws3_tasks5):
    space = enumerate_centralized(ws3_tasks5)
    for z in (0, 1, 117, 335):
        assert space.encode(space.decode(z)) == z
    too_busy = np.zeros((3, 5), dtype=int)
    too_busy[0, :2] = 1
    with pytest.raises(ValueError):
        space.encode(too_busy)


def test_agent_spaces(ws3_tasks5):
    spaces = enumerate_agents(ws3_tasks5)
    assert [len(s) for s in spaces] == [6, 26, 6]
    for i, space in enumerate(spaces):
        assert space.rows[0].sum() == 0
        assert space.rows.sum(axis=1).max() == ws3_tasks5.occupancy_caps[i]
        others = np.delete(space.matrices, i, axis=1)
        assert others.sum() == 0
        assert (space.matrices[:, i, :] == space.rows).all()
    row = np.array([0, 1, 0, 1, 1])
    assert spaces[1].decode(spaces[1].encode(row)).tolist() == row.tolist()
    with pytest.raises(ValueError):
        spaces[0].encode(row)


def test_concat_rows(ws3_tasks5):
    spaces = enumerate_agents(ws3_tasks5)
    joint = concat_rows([spaces[0].rows[1], spaces[1].rows[0], spaces[2].rows[2]])
    assert joint.shape == (3, 5)
    assert joint[1].sum() == 0
    with pytest.raises(ValueError):
        concat_rows([np.zeros(5), np.zeros(4)])


def test_materialization_cap(ws3_tasks5, monkeypatch):
    with pytest.raises(ActionSpaceTooLarge, match="multi-agent"):
        enumerate_centralized(ws3_tasks5, cap=100)
    monkeypatch.setenv("GALBP_ACTION_CAP", "200")
    assert action_cap() == 200
    with pytest.raises(ActionSpaceTooLarge):
        enumerate_centralized(ws3_tasks5)


def test_large_instances_stay_agent_sized():
    shape = SpaceShape((3,) * 15, 10)
    assert count_occupancy_constrained(shape) > 10 ** 7
    assert count_agent_space(shape, 0) == 1 + 10 + 45 + 120
    assert len(enumerate_agent(shape, 0)) == 176
