"""Masked deep Q-learning: infeasible actions get Q = -inf in selection and targets."""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

import numpy as np

from .buffers import EpsilonSchedule, ReplayBuffer
from .network import AdamOptimizer, DenseNetwork

logger = logging.getLogger(__name__)


@dataclass
class DQNConfig:
    learning_rate: float = 1e-5
    batch_size: int = 64
    discount: float = 0.995
    memory: int = 100000
    target_sync: int = 10          # learn steps between soft updates
    soft_update: float = 0.8       # tau, weight of the online network
    grad_clip: Optional[float] = 1.0
    warm_start: int = 200
    hidden: int = 534
    depth: int = 3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DQNConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown DQN settings: {sorted(unknown)}")
        return cls(**data)

    def epsilon_schedule(self, episodes: int) -> EpsilonSchedule:
        return EpsilonSchedule(self.epsilon_start, self.epsilon_end,
                               int(round(self.epsilon_decay_fraction * episodes)))


def masked_q(q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(mask, dtype=bool), q, -np.inf)


def dqn_select_action(q: np.ndarray, mask: np.ndarray, epsilon: float,
                      rng: np.random.Generator) -> int:
    """Epsilon-greedy over the feasible actions only."""
    feasible = np.flatnonzero(mask)
    assert feasible.size, "mask admits no action"
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.choice(feasible))
    return int(np.argmax(masked_q(q, mask)))


def td_targets(next_q: np.ndarray, rewards: np.ndarray, dones: np.ndarray,
               next_masks: np.ndarray, discount: float) -> np.ndarray:
    """r + gamma * (1 - done) * max over feasible next actions."""
    best_next = masked_q(next_q, next_masks).max(axis=1)
    return np.where(dones, rewards, rewards + discount * np.where(dones, 0.0, best_next))


def dqn_learn_step(online: DenseNetwork, target: DenseNetwork, batch: Dict[str, np.ndarray],
                   optimizer: AdamOptimizer, discount: float) -> float:
    """One gradient step on the mean squared TD error; returns the loss."""
    next_q = target.forward(batch["next_states"])
    y = td_targets(next_q, batch["rewards"], batch["dones"], batch["next_masks"], discount)

    q, cache = online.forward_cached(batch["states"])
    rows = np.arange(q.shape[0])
    error = q[rows, batch["actions"]] - y
    loss = float(np.mean(error ** 2))

    grad_q = np.zeros_like(q)
    grad_q[rows, batch["actions"]] = 2.0 * error / q.shape[0]
    optimizer.step(online.backward(cache, grad_q))
    return loss


class DQNAgent:
    """Online/target network pair with a replay buffer over one action space."""

    def __init__(self, state_size: int, num_actions: int, config: DQNConfig, seed: int = 0):
        self.config = config
        self.num_actions = num_actions
        self.rng = np.random.default_rng(seed)
        self.online = DenseNetwork.with_hidden(state_size, config.hidden, num_actions,
                                               depth=config.depth, seed=seed)
        self.target = self.online.copy()
        self.optimizer = AdamOptimizer(
            self.online.parameters(), learning_rate=config.learning_rate,
            beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps,
            clip_norm=config.grad_clip,
        )
        self.memory = ReplayBuffer(config.memory, state_size, num_actions)
        self.learn_steps = 0
        self.epsilon = config.epsilon_start

    def act(self, state_vec: np.ndarray, mask: np.ndarray, greedy: bool = False) -> int:
        q = self.online.forward(state_vec)
        return dqn_select_action(q, mask, 0.0 if greedy else self.epsilon, self.rng)

    def reselect(self, state_vec: np.ndarray, mask: np.ndarray, greedy: bool = True) -> int:
        """Coordinator re-selection; Q-learners always choose greedily here."""
        return self.act(state_vec, mask, greedy=True)

    def remember(self, state_vec, action: int, reward: float, next_state_vec, done: bool,
                 mask, next_mask):
        self.memory.add(state_vec, action, reward, next_state_vec, done, mask, next_mask)

    def learn(self) -> Optional[float]:
        if len(self.memory) < max(self.config.warm_start, 1):
            return None
        batch = self.memory.sample(self.config.batch_size, self.rng)
        loss = dqn_learn_step(self.online, self.target, batch, self.optimizer,
                              self.config.discount)
        self.learn_steps += 1
        if self.learn_steps % self.config.target_sync == 0:
            self.target.blend_from(self.online, self.config.soft_update)
        return loss

    def state_dict(self) -> Dict[str, Any]:
        return {
            "kind": "dqn",
            "config": self.config.to_dict(),
            "online": self.online.to_dict(),
            "target": self.target.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "learn_steps": self.learn_steps,
        }

    def load_state_dict(self, data: Dict[str, Any]):
        self.online = DenseNetwork.from_dict(data["online"])
        self.target = DenseNetwork.from_dict(data["target"])
        self.optimizer = AdamOptimizer.from_dict(data["optimizer"], self.online.parameters())
        self.learn_steps = data.get("learn_steps", 0)
