"""State transition and reward of the factory MDP."""

from typing import Optional, Tuple

import numpy as np

from .config import FactoryConfig, RewardConfig
from .constraints import FeasibilityViolation, check_action
from .state import FactoryState, TaskAssignment


def book_assignment(state: FactoryState, action: TaskAssignment, config: FactoryConfig):
    """Apply the assignment phase of a transition in place.

    Occupancy, remaining duration, execution flag, task allocation, buffers and
    inventories are booked for every a(i, j) = 1. The clock and the remaining
    durations of already running tasks are untouched.
    """
    rows, cols = np.nonzero(np.asarray(action))
    if rows.size == 0:
        return
    needs = config.resource_needs[cols]                       # (n, R)
    np.add.at(state.occupancies, rows, 1)
    state.remaining[rows, cols] = config.durations[rows, cols]
    state.executing[rows, cols] = 1
    state.allocated[rows, cols, :] += needs
    np.add.at(state.buffers, rows, needs)
    state.inventories -= needs.sum(axis=0)


def _advance_execution(state: FactoryState, running: np.ndarray, config: FactoryConfig):
    """Decrement tasks that were executing before this step and complete them at zero."""
    rows, cols = np.nonzero(running)
    if rows.size == 0:
        return
    state.remaining[rows, cols] -= 1
    completed = state.remaining[rows, cols] == 0
    rows, cols = rows[completed], cols[completed]
    if rows.size == 0:
        return
    needs = config.resource_needs[cols]
    state.finished[cols] = 1
    state.executing[rows, cols] = 0
    np.add.at(state.occupancies, rows, -1)
    state.allocated[rows, cols, :] -= needs
    np.add.at(state.buffers, rows, -needs)
    if config.returnable_resources:
        state.inventories += needs.sum(axis=0)


def transition(state: FactoryState, action: TaskAssignment, config: FactoryConfig,
               reward_cfg: Optional[RewardConfig] = None,
               validate: bool = True) -> Tuple[FactoryState, float, bool]:
    """Advance the factory by one time step.

    New assignments are booked first; tasks that were already executing are
    then decremented, so a task assigned at clock k is finished at clock
    k + 1 + D(i, j). The reward is evaluated with the post-transition clock.
    """
    if state.done:
        raise ValueError("transition called on a terminal state")
    action = np.asarray(action)
    if validate:
        violated = check_action(state, action, config)
        if violated is not None:
            raise FeasibilityViolation(violated, action)

    reward_cfg = reward_cfg or config.reward
    nxt = state.copy()
    running = state.executing.astype(bool)
    book_assignment(nxt, action, config)
    _advance_execution(nxt, running, config)
    nxt.clock = state.clock + 1

    finished_all = nxt.all_finished
    nxt.done = finished_all or nxt.clock >= config.horizon
    reward = reward_cfg.reward(finished_all, nxt.clock)
    return nxt, reward, nxt.done

