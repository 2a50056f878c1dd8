"""State-dependent action masks M(s) and M_i(s)."""

import logging
from typing import Dict, List

import numpy as np

from src.factory.config import FactoryConfig
from src.factory.constraints import FEASIBLE, Constraint, batch_violations
from src.factory.dynamics import book_assignment, transition
from src.factory.state import FactoryState, TaskAssignment, null_action, reset
from .action_space import AgentActionSpace, CentralizedActionSpace

logger = logging.getLogger(__name__)

# Boolean vector over an action space; True marks a feasible action.
ActionMask = np.ndarray


def _mask(state: FactoryState, matrices: np.ndarray, config: FactoryConfig) -> ActionMask:
    mask = batch_violations(state, matrices, config) == FEASIBLE
    assert mask[0], "null action must always be feasible"
    return mask


def centralized_mask(state: FactoryState, space: CentralizedActionSpace,
                     config: FactoryConfig) -> ActionMask:
    return _mask(state, space.matrices, config)


def agent_mask(state: FactoryState, agent: int, space: AgentActionSpace,
               config: FactoryConfig) -> ActionMask:
    """Mask of agent i: each row checked as a solo assignment (other rows zero)."""
    if space.workstation != agent:
        raise ValueError(f"space belongs to workstation {space.workstation + 1}, not {agent + 1}")
    return _mask(state, space.matrices, config)


def agent_masks(state: FactoryState, spaces: List[AgentActionSpace],
                config: FactoryConfig) -> List[ActionMask]:
    return [agent_mask(state, s.workstation, s, config) for s in spaces]


def completion_clocks(state: FactoryState, action: TaskAssignment,
                      config: FactoryConfig) -> Dict[int, int]:
    """Clock of the first state in which each task assigned by `action` is finished.

    The factory is run forward with null actions, ignoring feasibility and the
    horizon, until every newly assigned task has completed.
    """
    pending = set(np.nonzero(np.asarray(action))[1].tolist())
    clocks: Dict[int, int] = {}
    sim, _, _ = transition(state, action, config, validate=False)
    while True:
        for j in sorted(pending):
            if sim.finished[j]:
                clocks[j] = sim.clock
                pending.discard(j)
        if not pending:
            return clocks
        sim.done = False
        sim, _, _ = transition(sim, null_action(config), config, validate=False)


def misses_deadline(state: FactoryState, action: TaskAssignment, config: FactoryConfig) -> bool:
    # a task finished in the state at clock c was last processed at clock c - 1
    clocks = completion_clocks(state, action, config)
    return any(c - 1 > config.deadlines[j] for j, c in clocks.items())


def confirm_violation(state: FactoryState, action: TaskAssignment, constraint: Constraint,
                      config: FactoryConfig) -> bool:
    """Force `action` through the booking phase and confirm the named violation shows.

    The booked state is inspected directly (before any completions of the
    same step), which is where an over-commitment first becomes visible.
    """
    booked = state.copy()
    book_assignment(booked, action, config)
    action = np.asarray(action)
    per_task = booked.executing.sum(axis=0)

    if constraint == Constraint.UNIQUE_ASSIGNMENT:
        return bool((per_task > 1).any())
    if constraint == Constraint.FINISHED:
        return bool(((booked.finished == 1) & (per_task > 0)).any())
    if constraint == Constraint.EXECUTING:
        occupancy_drift = not np.array_equal(booked.occupancies, booked.executing.sum(axis=1))
        return bool((per_task > 1).any() or occupancy_drift)
    if constraint == Constraint.DEADLINE:
        return misses_deadline(state, action, config)
    if constraint == Constraint.OCCUPANCY:
        return bool((booked.occupancies > config.occupancy_caps).any())
    if constraint == Constraint.PRECEDENCE:
        started = per_task > 0
        unmet = (config.precedence == -1) & (booked.finished == 0)[None, :]
        return bool((started & unmet.any(axis=1)).any())
    if constraint == Constraint.BUFFER:
        return bool((booked.buffers > config.buffer_caps).any())
    if constraint == Constraint.INVENTORY:
        return bool((booked.inventories < 0).any())
    return False


def sweep_masks(config: FactoryConfig, space: CentralizedActionSpace, num_states: int,
                rng: np.random.Generator) -> Dict[str, int]:
    """Soundness/completeness sweep over states visited by random masked rollouts.

    Every admitted action must transition cleanly into a consistent state;
    every rejected action must have its named constraint confirmed by a forced
    booking. Returns counters; `discrepancies` must be zero.
    """
    stats = {"states": 0, "admitted": 0, "rejected": 0, "discrepancies": 0}
    state = reset(config)
    while stats["states"] < num_states:
        codes = batch_violations(state, space.matrices, config)
        mask = codes == FEASIBLE
        stats["states"] += 1

        for z in np.flatnonzero(mask):
            nxt, _, _ = transition(state, space.decode(z), config, validate=False)
            problems = nxt.check_invariants(config)
            if misses_deadline(state, space.decode(z), config):
                problems.append("assigned task finishes after its deadline")
            stats["admitted"] += 1
            if problems:
                stats["discrepancies"] += 1
                logger.error(f"Admitted action {z} leads to invalid state: {problems}")

        for z in np.flatnonzero(~mask):
            named = Constraint(int(codes[z]))
            stats["rejected"] += 1
            if not confirm_violation(state, space.decode(z), named, config):
                stats["discrepancies"] += 1
                logger.error(f"Rejected action {z} not confirmed (constraint {named.name})")

        z = int(rng.choice(np.flatnonzero(mask)))
        state, _, done = transition(state, space.decode(z), config)
        if done:
            state = reset(config)
    return stats
