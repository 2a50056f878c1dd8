"""Tests for the gymnasium environment over enumerated action spaces."""

import gymnasium as gym
import numpy as np
import pytest

from conftest import make_config
from src.actions import AssemblyLineEnv, enumerate_agents, enumerate_centralized
from src.factory import Constraint, FeasibilityViolation, null_action, reset, transition


def assign(config, *pairs):
    a = null_action(config)
    for i, j in pairs:
        a[i - 1, j - 1] = 1
    return a


def test_spaces(ws3_tasks5):
    env = AssemblyLineEnv(ws3_tasks5, enumerate_centralized(ws3_tasks5))
    assert isinstance(env, gym.Env)
    assert isinstance(env.action_space, gym.spaces.Discrete)
    assert env.action_space.n == 336
    assert env.observation_space.shape == (48,)

    multi = AssemblyLineEnv(ws3_tasks5, enumerate_agents(ws3_tasks5))
    assert isinstance(multi.action_space, gym.spaces.MultiDiscrete)
    assert multi.action_space.nvec.tolist() == [6, 26, 6]


def test_reset_reports_mask(ws3_tasks5):
    env = AssemblyLineEnv(ws3_tasks5, enumerate_centralized(ws3_tasks5))
    obs, info = env.reset(seed=0)
    assert obs.shape == (48,) and not obs.any()
    assert info["clock"] == 0
    assert info["action_mask"].sum() == 44

    multi = AssemblyLineEnv(ws3_tasks5, enumerate_agents(ws3_tasks5))
    _, info = multi.reset()
    assert [int(m.sum()) for m in info["action_mask"]] == [4, 8, 4]


def test_episode_terminates_on_completion(single_task):
    space = enumerate_centralized(single_task)
    env = AssemblyLineEnv(single_task, space)
    env.reset()
    z = space.encode(assign(single_task, (1, 1)))
    _, reward, terminated, truncated, info = env.step(z)
    assert reward == 0.0 and not terminated and not truncated
    assert info["assignment"].tolist() == [[1]]
    for _ in range(3):
        _, reward, terminated, truncated, info = env.step(0)
    assert terminated and not truncated
    assert info["clock"] == 4
    assert reward == pytest.approx(10 / (1 + 4))


def test_horizon_truncates():
    config = make_config([[3]], horizon=2)
    env = AssemblyLineEnv(config, enumerate_centralized(config))
    _, info = env.reset()
    # the only task cannot meet its deadline
    assert info["action_mask"].tolist() == [True, False]
    _, _, terminated, truncated, _ = env.step(0)
    assert not terminated and not truncated
    _, reward, terminated, truncated, _ = env.step(0)
    assert truncated and not terminated and reward == 0.0


def test_penalty_mode_replaces_infeasible_action(ws3_tasks5):
    space = enumerate_centralized(ws3_tasks5)
    z = space.encode(assign(ws3_tasks5, (1, 2)))
    env = AssemblyLineEnv(ws3_tasks5, space, penalty=-1.0)
    _, info = env.reset()
    assert not info["action_mask"][z]
    _, reward, _, _, info = env.step(z)
    assert reward == -1.0
    assert env.infeasible_attempts == 1
    assert info["violated"] == Constraint.PRECEDENCE
    assert info["assignment"].sum() == 0
    assert info["clock"] == 1 and info["state"].occupancies.sum() == 0

    strict = AssemblyLineEnv(ws3_tasks5, space)
    strict.reset()
    with pytest.raises(FeasibilityViolation):
        strict.step(z)


def test_agent_actions_build_joint_assignment(ws3_tasks5):
    spaces = enumerate_agents(ws3_tasks5)
    env = AssemblyLineEnv(ws3_tasks5, spaces)
    env.reset()
    action = [0, spaces[1].encode(np.array([1, 0, 1, 0, 0])),
              spaces[2].encode(np.array([0, 0, 0, 1, 0]))]
    _, _, _, _, info = env.step(np.array(action))
    assert np.array_equal(info["assignment"], assign(ws3_tasks5, (2, 1), (2, 3), (3, 4)))
    assert info["state"].occupancies.tolist() == [0, 2, 1]
    assert len(info["action_mask"]) == 3

    with pytest.raises(ValueError):
        env.step([0, 0])
    with pytest.raises(ValueError):
        AssemblyLineEnv(ws3_tasks5, spaces[:2])


def test_reset_from_given_state(chain):
    start, _, _ = transition(reset(chain), assign(chain, (1, 1)), chain)
    key = start.key()
    env = AssemblyLineEnv(chain, enumerate_centralized(chain))
    _, info = env.reset(options={"state": start})
    assert info["clock"] == 1
    # task 1 is running on the only workstation
    assert info["action_mask"].tolist() == [True, False, False]
    env.step(0)
    assert start.key() == key


def test_infeasible_action_logged(ws3_tasks5, caplog):
    space = enumerate_centralized(ws3_tasks5)
    z = space.encode(assign(ws3_tasks5, (1, 2)))
    env = AssemblyLineEnv(ws3_tasks5, space, penalty=-1.0)
    env.reset()
    with caplog.at_level("DEBUG", logger="src.actions.environment"):
        env.step(z)
    assert f"Infeasible action {z} replaced by null (PRECEDENCE at clock 0)" in caplog.text
