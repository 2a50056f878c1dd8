"""Multi-agent coordination: fictitious booking and the sequential feasibility check."""

import logging
from dataclasses import dataclass
from typing import List, Protocol, Sequence, Tuple

import numpy as np

from src.actions.action_space import AgentActionSpace, concat_rows
from src.actions.mask import agent_masks
from src.factory.config import FactoryConfig
from src.factory.constraints import check_action
from src.factory.dynamics import book_assignment
from src.factory.state import FactoryState, TaskAssignment, flatten_state

logger = logging.getLogger(__name__)


class WorkstationAgent(Protocol):
    """What the coordinator needs from an agent: a choice under a given mask."""

    def reselect(self, state_vec: np.ndarray, mask: np.ndarray, greedy: bool = False) -> int:
        ...


class FictitiousEnvironment:
    """Copy of the real state where proposals book assets but nothing executes."""

    def __init__(self, state: FactoryState, config: FactoryConfig,
                 spaces: Sequence[AgentActionSpace]):
        self.config = config
        self.spaces = list(spaces)
        self.state = state.copy()
        self.masks = agent_masks(self.state, self.spaces, config)

    def fake_transition(self, joint_action: TaskAssignment) -> Tuple[FactoryState, List[np.ndarray]]:
        """Book `joint_action` on the fictitious state and recompute every agent mask.

        Remaining durations of running tasks and the clock do not move, and no
        reward is produced.
        """
        violated = check_action(self.state, joint_action, self.config)
        assert violated is None, f"fictitious booking broke constraint {violated}"
        book_assignment(self.state, joint_action, self.config)
        self.masks = agent_masks(self.state, self.spaces, self.config)
        return self.state, self.masks


@dataclass
class AgentPool:
    """One agent per workstation over its own action space; rewards are shared."""
    config: FactoryConfig
    spaces: List[AgentActionSpace]
    agents: List[WorkstationAgent]
    sfc_invocations: int = 0
    sfc_visits: int = 0

    def __post_init__(self):
        if len(self.agents) != len(self.spaces) or len(self.spaces) != self.config.num_workstations:
            raise ValueError("need exactly one agent and one action space per workstation")

    def __len__(self) -> int:
        return len(self.agents)

    def masks(self, state: FactoryState) -> List[np.ndarray]:
        return agent_masks(state, self.spaces, self.config)

    def joint_action(self, indices: Sequence[int]) -> TaskAssignment:
        return concat_rows([space.rows[z] for space, z in zip(self.spaces, indices)])


def sequential_feasibility_check(state: FactoryState, pool: AgentPool,
                                 rng: np.random.Generator,
                                 greedy: bool = False) -> Tuple[TaskAssignment, List[int]]:
    """Randomized sequential re-selection producing a feasible joint action.

    Agents are visited once each in a uniformly random order. Each chooses
    from the fictitious state under its fictitious mask, and its choice is
    booked before the next agent looks, so later agents never see tasks or
    assets claimed earlier.
    """
    fake = FictitiousEnvironment(state, pool.config, pool.spaces)
    n_i, n_j = pool.config.num_workstations, pool.config.num_tasks
    joint = np.zeros((n_i, n_j), dtype=np.int64)
    chosen = [0] * n_i

    pool.sfc_invocations += 1
    for i in rng.permutation(n_i):
        i = int(i)
        mask = fake.masks[i]
        z = pool.agents[i].reselect(flatten_state(fake.state, pool.config), mask, greedy=greedy)
        if not mask[z]:
            raise AssertionError(f"agent {i + 1} chose masked action {z} during SFC")
        chosen[i] = z
        joint[i] = pool.spaces[i].rows[z]
        solo = np.zeros_like(joint)
        solo[i] = joint[i]
        fake.fake_transition(solo)
        pool.sfc_visits += 1

    violated = check_action(state, joint, pool.config)
    assert violated is None, f"SFC produced an infeasible joint action (constraint {violated})"
    return joint, chosen


def coordinate(state: FactoryState, pool: AgentPool, proposals: Sequence[int],
               rng: np.random.Generator, greedy: bool = False) -> Tuple[TaskAssignment, List[int], bool]:
    """Concatenate proposals and fall back to the SFC only when they conflict.

    Returns (joint action, executed per-agent indices, whether SFC ran).
    """
    joint = pool.joint_action(proposals)
    if check_action(state, joint, pool.config) is None:
        return joint, list(proposals), False
    logger.debug(f"Joint proposal infeasible at clock {state.clock}, running SFC")
    joint, chosen = sequential_feasibility_check(state, pool, rng, greedy=greedy)
    return joint, chosen, True
