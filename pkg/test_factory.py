"""Tests for the factory model: instances, transitions, constraints and rewards."""

import json
import os

import numpy as np
import pytest

from conftest import INSTANCE_DIR, make_config
from src.factory import (
    Constraint,
    FactoryConfig,
    FeasibilityViolation,
    InstanceValidationError,
    RewardConfig,
    check_action,
    flatten_state,
    generate_instance,
    load_instance,
    null_action,
    reset,
    resource_assignment,
    save_instance,
    transition,
)
from src.factory.config import precedence_cycle


def assign(config, *pairs):
    """Action matrix from 1-based (workstation, task) pairs."""
    a = null_action(config)
    for i, j in pairs:
        a[i - 1, j - 1] = 1
    return a


def test_state_sizes(ws3_tasks5):
    assert ws3_tasks5.state_size == 48
    big = load_instance(os.path.join(INSTANCE_DIR, "ws15_tasks10.json"))
    assert big.state_size == 465
    assert flatten_state(reset(big), big).shape == (465,)


def test_reset_state(ws3_tasks5):
    s = reset(ws3_tasks5)
    assert s.clock == 0
    assert not s.done
    assert s.occupancies.sum() == 0 and s.remaining.sum() == 0 and s.allocated.sum() == 0
    assert s.inventories.tolist() == [1000, 2000]
    assert s.check_invariants(ws3_tasks5) == []


def test_assignment_books_assets(ws3_tasks5):
    s, reward, done = transition(reset(ws3_tasks5), assign(ws3_tasks5, (1, 1)), ws3_tasks5)
    assert s.clock == 1
    assert s.remaining[0, 0] == 4
    assert s.executing[0, 0] == 1
    assert s.occupancies.tolist() == [1, 0, 0]
    assert s.allocated[0, 0].tolist() == [13, 12]
    assert s.buffers[0].tolist() == [13, 12]
    assert s.inventories.tolist() == [987, 1988]
    assert reward == 0.0 and not done
    assert s.check_invariants(ws3_tasks5) == []


def test_task_completes_after_duration(ws3_tasks5):
    s, _, _ = transition(reset(ws3_tasks5), assign(ws3_tasks5, (1, 1)), ws3_tasks5)
    for _ in range(3):
        s, _, _ = transition(s, null_action(ws3_tasks5), ws3_tasks5)
    assert s.remaining[0, 0] == 1 and s.finished[0] == 0

    s, _, _ = transition(s, null_action(ws3_tasks5), ws3_tasks5)
    assert s.clock == 5
    assert s.finished[0] == 1
    assert s.executing.sum() == 0 and s.occupancies.sum() == 0
    assert s.allocated.sum() == 0 and s.buffers.sum() == 0
    assert s.inventories.tolist() == [987, 1988]
    assert s.check_invariants(ws3_tasks5) == []


def test_returnable_resources_come_back():
    config = make_config([[1]], needs=[[7]], inventories=[10], returnable=True)
    s, _, _ = transition(reset(config), assign(config, (1, 1)), config)
    assert s.inventories.tolist() == [3]
    s, _, done = transition(s, null_action(config), config)
    assert done and s.inventories.tolist() == [10]
    assert s.check_invariants(config) == []


def test_precedence_violation(ws3_tasks5):
    a = assign(ws3_tasks5, (1, 2))
    assert check_action(reset(ws3_tasks5), a, ws3_tasks5) == Constraint.PRECEDENCE
    with pytest.raises(FeasibilityViolation) as err:
        transition(reset(ws3_tasks5), a, ws3_tasks5)
    assert err.value.constraint == Constraint.PRECEDENCE
    assert int(err.value.constraint) == 5


def test_deadline_violation(ws3_tasks5):
    s = reset(ws3_tasks5)
    s.clock = 9
    # 9 + D(2, 3) = 21 > F(3) = 20
    assert check_action(s, assign(ws3_tasks5, (2, 3)), ws3_tasks5) == Constraint.DEADLINE


def test_unique_assignment_checked_first(ws3_tasks5):
    a = assign(ws3_tasks5, (1, 2), (2, 2))
    assert check_action(reset(ws3_tasks5), a, ws3_tasks5) == Constraint.UNIQUE_ASSIGNMENT


def test_occupancy_violation(ws3_tasks5):
    s = reset(ws3_tasks5)
    assert check_action(s, assign(ws3_tasks5, (1, 1), (1, 3)), ws3_tasks5) == Constraint.OCCUPANCY
    assert check_action(s, assign(ws3_tasks5, (2, 1), (2, 3), (2, 4)), ws3_tasks5) is None


def test_executing_and_finished(chain):
    s, _, _ = transition(reset(chain), assign(chain, (1, 1)), chain)
    assert check_action(s, assign(chain, (1, 1)), chain) == Constraint.EXECUTING
    while not s.finished[0]:
        s, _, _ = transition(s, null_action(chain), chain)
    assert check_action(s, assign(chain, (1, 1)), chain) == Constraint.FINISHED
    assert check_action(s, assign(chain, (1, 2)), chain) is None


def test_buffer_and_inventory():
    config = make_config([[1, 1], [1, 1]], occupancy=[2, 2], needs=[[5], [6]],
                         buffers=[[10], [10]], inventories=[8])
    s = reset(config)
    assert check_action(s, assign(config, (1, 1), (1, 2)), config) == Constraint.BUFFER
    assert check_action(s, assign(config, (1, 1), (2, 2)), config) == Constraint.INVENTORY
    assert check_action(s, assign(config, (2, 2)), config) is None


def test_first_violation_order(chain):
    s = reset(chain)
    s.finished[:] = 1
    s.clock = 9
    # finished and late at once: the lower-numbered constraint is reported
    assert check_action(s, assign(chain, (1, 1)), chain) == Constraint.FINISHED


def test_null_action_always_feasible(ws3_tasks5):
    rng = np.random.default_rng(3)
    s = reset(ws3_tasks5)
    for _ in range(15):
        assert check_action(s, null_action(ws3_tasks5), ws3_tasks5) is None
        action = null_action(ws3_tasks5)
        j = int(rng.integers(ws3_tasks5.num_tasks))
        action[int(rng.integers(ws3_tasks5.num_workstations)), j] = 1
        if check_action(s, action, ws3_tasks5) is not None:
            action = null_action(ws3_tasks5)
        s, _, done = transition(s, action, ws3_tasks5)
        assert s.check_invariants(ws3_tasks5) == []
        if done:
            break


def test_action_shape_checked(ws3_tasks5):
    with pytest.raises(ValueError):
        check_action(reset(ws3_tasks5), np.zeros((2, 5), dtype=int), ws3_tasks5)


def test_reward_on_completion(single_task):
    s, reward, done = transition(reset(single_task), assign(single_task, (1, 1)), single_task)
    rewards = [reward]
    while not done:
        s, reward, done = transition(s, null_action(single_task), single_task)
        rewards.append(reward)
    assert s.clock == 4
    assert rewards[:-1] == [0.0, 0.0, 0.0]
    assert rewards[-1] == pytest.approx(10 / (1 + 4))


def test_reward_formula():
    assert RewardConfig().reward(True, 9) == pytest.approx(1.0)
    assert RewardConfig().reward(False, 9) == 0.0
    assert RewardConfig(alpha=2.0, beta=5.0).reward(True, 3) == pytest.approx(0.5)
    with pytest.raises(InstanceValidationError):
        RewardConfig(alpha=0.0)


def test_horizon_truncation():
    config = make_config([[3]], horizon=2)
    s = reset(config)
    assert check_action(s, assign(config, (1, 1)), config) == Constraint.DEADLINE
    s, reward, done = transition(s, null_action(config), config)
    assert not done
    s, reward, done = transition(s, null_action(config), config)
    assert done and not s.all_finished and reward == 0.0
    with pytest.raises(ValueError):
        transition(s, null_action(config), config)


def test_resource_assignment(ws3_tasks5):
    a = assign(ws3_tasks5, (2, 3), (3, 4))
    y = resource_assignment(a, ws3_tasks5.num_resources)
    assert y.shape == (3, 5, 2)
    assert (y[:, :, 0] == a).all() and (y[:, :, 1] == a).all()


def test_validation_reports_every_problem(ws3_tasks5):
    data = ws3_tasks5.to_dict()
    data["precedence"] = [[0, 1, 0, 0, 0], [1, 0, 0, 0, 0], [0, 0, 0, 0, 0],
                          [0, 0, 0, 0, 0], [0, 0, 0, 0, 0]]
    data["durations"][0][0] = 0
    with pytest.raises(InstanceValidationError) as err:
        FactoryConfig.from_dict(data)
    problems = err.value.problems
    assert any("durations[1][1]" in p for p in problems)
    assert any("antisymmetric" in p for p in problems)


def test_cycle_detected():
    p = np.array([[0, 1, -1], [-1, 0, 1], [1, -1, 0]])
    assert sorted(precedence_cycle(p)) == [0, 1, 2]
    with pytest.raises(InstanceValidationError) as err:
        make_config([[1, 1, 1]], precedence=p)
    assert any("cyclic" in p for p in err.value.problems)


def test_missing_fields_and_bad_json(tmp_path):
    with pytest.raises(InstanceValidationError) as err:
        FactoryConfig.from_dict({"horizon": 5})
    assert "missing field 'durations'" in err.value.problems

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InstanceValidationError):
        load_instance(bad)


def test_fractional_values_rejected(ws3_tasks5):
    data = ws3_tasks5.to_dict()
    data["durations"][0][0] = 4.9
    data["resource_needs"][0][0] = 13.7
    data["horizon"] = 20.5
    with pytest.raises(InstanceValidationError) as err:
        FactoryConfig.from_dict(data)
    problems = err.value.problems
    assert "durations[1][1] must be a whole number, got 4.9" in problems
    assert "resource_needs[1][1] must be a whole number, got 13.7" in problems
    assert any(p.startswith("horizon must be a whole number") for p in problems)


def test_whole_floats_accepted(ws3_tasks5):
    data = ws3_tasks5.to_dict()
    data["durations"][0][0] = 4.0
    data["horizon"] = 20.0
    config = FactoryConfig.from_dict(data)
    assert config.durations[0, 0] == 4 and config.durations.dtype == np.int64
    assert config.horizon == 20 and isinstance(config.horizon, int)


@pytest.mark.parametrize("flag", ["false", 0, 1, None])
def test_returnable_flag_must_be_bool(ws3_tasks5, flag):
    data = ws3_tasks5.to_dict()
    data["returnable_resources"] = flag
    with pytest.raises(InstanceValidationError) as err:
        FactoryConfig.from_dict(data)
    assert err.value.problems == [f"returnable_resources must be true or false, got {flag!r}"]


def test_declared_counts_must_agree(ws3_tasks5):
    data = ws3_tasks5.to_dict()
    data["num_tasks"] = 6
    with pytest.raises(InstanceValidationError):
        FactoryConfig.from_dict(data)


def test_save_and_load(ws3_tasks5, tmp_path):
    path = tmp_path / "copy.json"
    save_instance(ws3_tasks5, path)
    loaded = load_instance(path)
    assert loaded.name == "ws3_tasks5"
    assert np.array_equal(loaded.durations, ws3_tasks5.durations)
    assert np.array_equal(loaded.precedence, ws3_tasks5.precedence)
    with open(path) as fh:
        assert json.load(fh)["occupancy_caps"] == [1, 3, 1]


def test_config_is_read_only(ws3_tasks5):
    with pytest.raises(ValueError):
        ws3_tasks5.durations[0, 0] = 1


def test_generated_instances_are_valid():
    for seed in range(10):
        config = generate_instance(3, 6, seed=seed)
        assert precedence_cycle(config.precedence) is None
        assert (config.inventories >= config.resource_needs.sum(axis=0)).all()
    a = generate_instance(4, 5, seed=7)
    b = generate_instance(4, 5, seed=7)
    assert np.array_equal(a.durations, b.durations)
    assert np.array_equal(a.precedence, b.precedence)


def test_shipped_instances_load():
    for name in ("ws3_tasks5", "ws15_tasks10", "ws10_tasks15"):
        config = load_instance(os.path.join(INSTANCE_DIR, f"{name}.json"))
        assert config.name == name
