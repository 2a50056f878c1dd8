"""Tests for the exact makespan oracle and its breadth-first cross-check."""

import numpy as np
import pytest

from conftest import make_config
from src.actions import enumerate_centralized
from src.factory import generate_instance, null_action, reset, transition
from src.solver import (
    BranchAndBoundSolver,
    SearchBudgetExceeded,
    bfs_optimum,
    lower_bound,
    replay,
    solve,
)


def test_single_task(single_task):
    result = solve(single_task)
    assert result.k_opt == 4
    assert result.feasible
    assert result.assignments() == [(0, 0, 0)]
    final = replay(single_task, result)
    assert final.all_finished and final.clock == 4


def test_chain(chain):
    result = solve(chain)
    assert result.k_opt == 6
    assert result.assignments() == [(0, 0, 0), (3, 0, 1)]
    assert replay(chain, result).clock == 6


def test_lower_bound(chain, ws3_tasks5):
    assert lower_bound(reset(chain), chain) == 6
    # task 1 (3 + 1) then task 2 (4 + 1)
    assert lower_bound(reset(ws3_tasks5), ws3_tasks5) == 9

    a = null_action(chain)
    a[0, 0] = 1
    s, _, _ = transition(reset(chain), a, chain)
    assert s.clock + lower_bound(s, chain) <= solve(chain).k_opt


def test_horizon_too_short():
    config = make_config([[3]], horizon=3)
    result = solve(config)
    assert result.k_opt is None and not result.feasible
    assert result.schedule == []
    assert bfs_optimum(config)[0] is None


def test_solve_from_intermediate_state(chain):
    a = null_action(chain)
    s, _, _ = transition(reset(chain), a, chain)
    result = solve(chain, start=s)
    assert result.start_clock == 1
    assert result.k_opt == 7
    assert replay(chain, result, start=s).clock == 7


def test_budget_exhaustion(chain, monkeypatch):
    with pytest.raises(SearchBudgetExceeded):
        solve(chain, budget=2)
    monkeypatch.setenv("GALBP_NODE_BUDGET", "2")
    with pytest.raises(SearchBudgetExceeded):
        BranchAndBoundSolver(chain).solve()


def test_replay_rejects_wrong_clock(chain):
    result = solve(chain)
    result.schedule[1] = (2, result.schedule[1][1])
    with pytest.raises(ValueError):
        replay(chain, result)


def test_matches_bfs_on_random_instances():
    rng = np.random.default_rng(11)
    checked = 0
    for seed in range(20):
        config = generate_instance(int(rng.integers(1, 4)), int(rng.integers(2, 5)),
                                   num_resources=1, seed=seed, duration_range=(1, 3),
                                   edge_probability=0.3)
        space = enumerate_centralized(config)
        result = solve(config, space=space)
        expected, _ = bfs_optimum(config, space=space)
        assert result.k_opt == expected, config.name
        if result.feasible:
            final = replay(config, result)
            assert final.all_finished and final.clock == result.k_opt
            assert result.k_opt >= lower_bound(reset(config), config)
        checked += 1
    assert checked == 20


@pytest.mark.slow
def test_ws3_tasks5_oracle(ws3_tasks5):
    space = enumerate_centralized(ws3_tasks5)
    result = solve(ws3_tasks5, space=space)
    assert result.feasible
    assert result.k_opt >= 9
    assert bfs_optimum(ws3_tasks5, space=space)[0] == result.k_opt
    final = replay(ws3_tasks5, result)
    assert final.all_finished and final.clock == result.k_opt
