"""Gymnasium environment over the enumerated factory action spaces."""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from src.factory.config import FactoryConfig, RewardConfig
from src.factory.constraints import check_action
from src.factory.dynamics import transition
from src.factory.state import FactoryState, TaskAssignment, flatten_state, null_action, reset

from .action_space import AgentActionSpace, CentralizedActionSpace, concat_rows
from .mask import agent_masks, centralized_mask

logger = logging.getLogger(__name__)

ActionSpaces = Union[CentralizedActionSpace, Sequence[AgentActionSpace]]


class AssemblyLineEnv(gym.Env):
    """Factory MDP with index actions and the exact feasibility mask in `info`.

    Given the centralized space, actions are `Discrete(|A|)` indices. Given one
    space per workstation, actions are `MultiDiscrete` with one row index per
    agent, and `info["action_mask"]` holds one mask per agent.

    Without `penalty` an infeasible action raises FeasibilityViolation. With it
    the environment runs as the unmasked baseline: the action is replaced by the
    null action and `penalty` is added to the step reward.
    """

    metadata = {"render_modes": []}

    def __init__(self, config: FactoryConfig, action_spaces: ActionSpaces,
                 penalty: Optional[float] = None, reward_cfg: Optional[RewardConfig] = None):
        super().__init__()
        self.config = config
        self.penalty = penalty
        self.reward_cfg = reward_cfg or config.reward
        self.centralized = isinstance(action_spaces, CentralizedActionSpace)
        if self.centralized:
            self.action_spaces = action_spaces
            self.action_space = spaces.Discrete(len(action_spaces))
        else:
            self.action_spaces = list(action_spaces)
            if len(self.action_spaces) != config.num_workstations:
                raise ValueError(
                    f"need one action space per workstation ({config.num_workstations}), "
                    f"got {len(self.action_spaces)}"
                )
            self.action_space = spaces.MultiDiscrete([len(s) for s in self.action_spaces])
        self.observation_space = spaces.Box(low=0.0, high=np.inf, shape=(config.state_size,),
                                            dtype=np.float64)
        self.state: FactoryState = reset(config)
        self.infeasible_attempts = 0

    def action_masks(self, state: Optional[FactoryState] = None):
        state = self.state if state is None else state
        if self.centralized:
            return centralized_mask(state, self.action_spaces, self.config)
        return agent_masks(state, self.action_spaces, self.config)

    def assignment(self, action: Union[int, Sequence[int]]) -> TaskAssignment:
        """Assignment matrix of an index action."""
        if self.centralized:
            return self.action_spaces.decode(int(action))
        indices: List[int] = [int(z) for z in np.atleast_1d(action)]
        if len(indices) != len(self.action_spaces):
            raise ValueError(
                f"expected {len(self.action_spaces)} agent actions, got {len(indices)}"
            )
        return concat_rows([space.rows[z] for space, z in zip(self.action_spaces, indices)])

    def _info(self) -> Dict[str, Any]:
        return {
            "action_mask": self.action_masks(),
            "clock": self.state.clock,
            "state": self.state,
        }

    def reset(self, *, seed: Optional[int] = None,
              options: Optional[Dict[str, Any]] = None) -> Tuple[np.ndarray, Dict[str, Any]]:
        """Start an episode at reset, or at `options["state"]` when given."""
        super().reset(seed=seed)
        start = (options or {}).get("state")
        self.state = reset(self.config) if start is None else start.copy()
        return flatten_state(self.state, self.config), self._info()

    def step(self, action) -> Tuple[np.ndarray, float, bool, bool, Dict[str, Any]]:
        assignment = self.assignment(action)
        extra = 0.0
        violated = None
        if self.penalty is not None:
            violated = check_action(self.state, assignment, self.config)
            if violated is not None:
                self.infeasible_attempts += 1
                logger.debug(f"Infeasible action {action} replaced by null "
                             f"({violated.name} at clock {self.state.clock})")
                assignment = null_action(self.config)
                extra = self.penalty
        self.state, reward, done = transition(self.state, assignment, self.config,
                                              self.reward_cfg)
        terminated = self.state.all_finished
        info = self._info()
        info["assignment"] = assignment
        info["violated"] = violated
        return (flatten_state(self.state, self.config), reward + extra, terminated,
                done and not terminated, info)
