"""Experience storage for the DQN (replay) and PPO (rollout) learners."""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np


class ReplayBuffer:
    """Fixed-capacity ring buffer of masked transitions.

    Storage grows by doubling up to `capacity`, so a large nominal capacity
    costs nothing until it fills.
    """

    INITIAL_ROWS = 1024

    def __init__(self, capacity: int, state_size: int, num_actions: int):
        self.capacity = int(capacity)
        self.state_size = state_size
        self.num_actions = num_actions
        self._allocate(min(self.capacity, self.INITIAL_ROWS))
        self._cursor = 0
        self._size = 0

    def _allocate(self, rows: int):
        new = {
            "states": np.zeros((rows, self.state_size)),
            "next_states": np.zeros((rows, self.state_size)),
            "actions": np.zeros(rows, dtype=np.int64),
            "rewards": np.zeros(rows),
            "dones": np.zeros(rows, dtype=bool),
            "masks": np.zeros((rows, self.num_actions), dtype=bool),
            "next_masks": np.zeros((rows, self.num_actions), dtype=bool),
        }
        for name, arr in new.items():
            old = getattr(self, name, None)
            if old is not None:
                arr[:old.shape[0]] = old
            setattr(self, name, arr)

    def __len__(self) -> int:
        return self._size

    def add(self, state, action: int, reward: float, next_state, done: bool, mask, next_mask):
        k = self._cursor
        if k >= self.states.shape[0]:
            self._allocate(min(self.capacity, 2 * self.states.shape[0]))
        self.states[k] = state
        self.actions[k] = action
        self.rewards[k] = reward
        self.next_states[k] = next_state
        self.dones[k] = done
        self.masks[k] = mask
        self.next_masks[k] = next_mask
        self._cursor = (k + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        """Uniform batch, without replacement inside the batch."""
        idx = rng.choice(self._size, size=min(batch_size, self._size), replace=False)
        return {
            "states": self.states[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_states": self.next_states[idx],
            "dones": self.dones[idx],
            "masks": self.masks[idx],
            "next_masks": self.next_masks[idx],
        }


@dataclass
class RolloutBuffer:
    """Time-ordered on-policy records, flushed after every learning phase."""
    states: List[np.ndarray] = field(default_factory=list)
    actions: List[int] = field(default_factory=list)
    log_probs: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    dones: List[bool] = field(default_factory=list)
    masks: List[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def add(self, state, action: int, log_prob: float, value: float, reward: float,
            done: bool, mask):
        self.states.append(np.asarray(state, dtype=np.float64))
        self.actions.append(int(action))
        self.log_probs.append(float(log_prob))
        self.values.append(float(value))
        self.rewards.append(float(reward))
        self.dones.append(bool(done))
        self.masks.append(np.asarray(mask, dtype=bool))

    def clear(self):
        for records in (self.states, self.actions, self.log_probs, self.values,
                        self.rewards, self.dones, self.masks):
            records.clear()


@dataclass
class EpsilonSchedule:
    """Linear decay from `start` to `end` over the first `decay_episodes` episodes."""
    start: float = 1.0
    end: float = 0.05
    decay_episodes: int = 1

    def value(self, episode: int) -> float:
        if self.decay_episodes <= 0:
            return self.end
        frac = min(max(episode, 0) / self.decay_episodes, 1.0)
        return self.start + frac * (self.end - self.start)
