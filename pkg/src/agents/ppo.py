"""Masked PPO-Clip: infeasible logits are set to -inf before the softmax."""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .buffers import RolloutBuffer
from .network import AdamOptimizer, DenseNetwork, masked_softmax

logger = logging.getLogger(__name__)


@dataclass
class PPOConfig:
    learning_rate: float = 3e-4
    batch_size: int = 5
    discount: float = 0.99
    memory: int = 100000
    clip: float = 0.2
    learn_every: int = 20
    epochs: int = 4
    gae_lambda: float = 0.95
    hidden: int = 258
    depth: int = 3
    entropy_coef: float = 0.01
    normalize_advantages: bool = True
    policy_output_scale: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PPOConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown PPO settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class PPOStats:
    policy_loss: float
    value_loss: float
    entropy: float


def ppo_policy(actor: DenseNetwork, state_vec: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Filtered probabilities p_f: exact zeros on masked actions, summing to one."""
    return masked_softmax(actor.forward(state_vec), mask)


def compute_probs_new_action(actor: DenseNetwork, state_vec: np.ndarray, action: int,
                             mask: np.ndarray) -> float:
    """Log p_f of an executed (possibly substituted) action under the current policy."""
    if not mask[action]:
        raise ValueError(f"substituted action {action} is masked as infeasible")
    return float(np.log(ppo_policy(actor, state_vec, mask)[action]))


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                last_value: float, gamma: float, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and return targets for a contiguous rollout.

    `last_value` bootstraps the state after the final record; a done flag cuts
    bootstrapping at its step.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    n = rewards.shape[0]
    advantages = np.zeros(n)
    next_value = float(last_value)
    running = 0.0
    for t in reversed(range(n)):
        keep = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * keep - values[t]
        running = delta + gamma * lam * keep * running
        advantages[t] = running
        next_value = values[t]
    return advantages, advantages + values


def clipped_surrogate_grad(logits: np.ndarray, masks: np.ndarray, actions: np.ndarray,
                           old_log_probs: np.ndarray, advantages: np.ndarray, clip: float,
                           entropy_coef: float) -> Tuple[np.ndarray, float, float]:
    """Loss gradient w.r.t. the logits, plus the surrogate loss and mean entropy.

    Loss = -mean(min(rho * A, clip(rho) * A)) - entropy_coef * mean(H), with
    rho = exp(log p_f(a) - stored log p_f(a)).
    """
    b = logits.shape[0]
    rows = np.arange(b)
    probs = masked_softmax(logits, masks)
    log_probs = np.where(probs > 0, np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    entropy = -(probs * log_probs).sum(axis=1)

    ratio = np.exp(log_probs[rows, actions] - old_log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantages
    loss = float(-np.mean(np.minimum(unclipped, clipped)))

    active = (unclipped <= clipped).astype(np.float64)
    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    coeff = -(advantages * ratio * active) / b
    grad = coeff[:, None] * (onehot - probs)
    grad += (entropy_coef / b) * probs * (log_probs + entropy[:, None])
    return grad, loss, float(entropy.mean())


class PPOAgent:
    """Actor and critic networks with separate Adam optimizers and a rollout buffer."""

    def __init__(self, state_size: int, num_actions: int, config: PPOConfig, seed: int = 0):
        self.config = config
        self.num_actions = num_actions
        self.rng = np.random.default_rng(seed)
        self.actor = DenseNetwork.with_hidden(state_size, config.hidden, num_actions,
                                              depth=config.depth, seed=seed,
                                              output_scale=config.policy_output_scale)
        self.critic = DenseNetwork.with_hidden(state_size, config.hidden, 1,
                                               depth=config.depth, seed=seed + 1)
        self.actor_opt = self._optimizer(self.actor)
        self.critic_opt = self._optimizer(self.critic)
        self.rollout = RolloutBuffer()
        self.last_stats: Optional[PPOStats] = None

    def _optimizer(self, net: DenseNetwork) -> AdamOptimizer:
        c = self.config
        return AdamOptimizer(net.parameters(), learning_rate=c.learning_rate,
                             beta1=c.adam_beta1, beta2=c.adam_beta2, eps=c.adam_eps)

    def policy(self, state_vec: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return ppo_policy(self.actor, state_vec, mask)

    def act(self, state_vec: np.ndarray, mask: np.ndarray, greedy: bool = False) -> Tuple[int, float]:
        probs = self.policy(state_vec, mask)
        if greedy:
            action = int(np.argmax(probs))
        else:
            action = int(self.rng.choice(probs.shape[0], p=probs))
        return action, float(np.log(probs[action]))

    def reselect(self, state_vec: np.ndarray, mask: np.ndarray, greedy: bool = False) -> int:
        return self.act(state_vec, mask, greedy=greedy)[0]

    def value(self, state_vec: np.ndarray) -> float:
        return float(self.critic.forward(state_vec)[0])

    def log_prob(self, state_vec: np.ndarray, action: int, mask: np.ndarray) -> float:
        return compute_probs_new_action(self.actor, state_vec, action, mask)

    def remember(self, state_vec, action: int, log_prob: float, value: float, reward: float,
                 done: bool, mask):
        self.rollout.add(state_vec, action, log_prob, value, reward, done, mask)

    def ready(self) -> bool:
        n = len(self.rollout)
        return n >= self.config.learn_every or n >= self.config.memory

    def learn(self, last_value: float = 0.0) -> Optional[PPOStats]:
        """Clipped-surrogate update over the stored rollout, then flush it."""
        c = self.config
        n = len(self.rollout)
        if n == 0:
            return None
        advantages, returns = compute_gae(self.rollout.rewards, self.rollout.values,
                                          self.rollout.dones, last_value,
                                          c.discount, c.gae_lambda)
        if c.normalize_advantages and n > 1:
            advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

        states = np.stack(self.rollout.states)
        masks = np.stack(self.rollout.masks)
        actions = np.asarray(self.rollout.actions)
        old_log_probs = np.asarray(self.rollout.log_probs)

        policy_losses, value_losses, entropies = [], [], []
        for _ in range(c.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, c.batch_size):
                idx = order[start:start + c.batch_size]

                logits, cache = self.actor.forward_cached(states[idx])
                grad, p_loss, entropy = clipped_surrogate_grad(
                    logits, masks[idx], actions[idx], old_log_probs[idx], advantages[idx],
                    c.clip, c.entropy_coef,
                )
                self.actor_opt.step(self.actor.backward(cache, grad))

                values, v_cache = self.critic.forward_cached(states[idx])
                error = values[:, 0] - returns[idx]
                v_loss = float(np.mean(error ** 2))
                v_grad = (2.0 * error / len(idx))[:, None]
                self.critic_opt.step(self.critic.backward(v_cache, v_grad))

                policy_losses.append(p_loss)
                value_losses.append(v_loss)
                entropies.append(entropy)

        self.rollout.clear()
        self.last_stats = PPOStats(float(np.mean(policy_losses)), float(np.mean(value_losses)),
                                   float(np.mean(entropies)))
        return self.last_stats

    def state_dict(self) -> Dict[str, Any]:
        return {
            "kind": "ppo",
            "config": self.config.to_dict(),
            "actor": self.actor.to_dict(),
            "critic": self.critic.to_dict(),
            "actor_optimizer": self.actor_opt.to_dict(),
            "critic_optimizer": self.critic_opt.to_dict(),
        }

    def load_state_dict(self, data: Dict[str, Any]):
        self.actor = DenseNetwork.from_dict(data["actor"])
        self.critic = DenseNetwork.from_dict(data["critic"])
        self.actor_opt = AdamOptimizer.from_dict(data["actor_optimizer"], self.actor.parameters())
        self.critic_opt = AdamOptimizer.from_dict(data["critic_optimizer"], self.critic.parameters())
