"""Multi-agent training loop: one learner per workstation, SFC coordination, shared reward."""

import logging
import time
from typing import Any, Dict, List, Optional

import numpy as np

from src.actions.action_space import enumerate_agents
from src.agents.coordination import AgentPool, coordinate
from src.factory.config import FactoryConfig
from src.factory.constraints import check_action
from src.factory.state import FactoryState

from .training_service import (
    DEFAULT_PENALTY,
    PROGRESS_EVERY,
    AgentConfig,
    EpisodeRecord,
    Rollout,
    Trainer,
    TrainingLog,
    make_agent,
)

logger = logging.getLogger(__name__)

# Agent i of run seed s is seeded with s * AGENT_SEED_STRIDE + i
AGENT_SEED_STRIDE = 1000


class MultiAgentTrainer(Trainer):
    """Per-workstation learners over A_i, coordinated by the feasibility check."""

    mode = "multi"

    def __init__(self, config: FactoryConfig, algorithm: str, masking: bool = True,
                 agent_config: Optional[AgentConfig] = None, seed: int = 0,
                 penalty: float = DEFAULT_PENALTY, log_every: int = PROGRESS_EVERY):
        super().__init__(config, algorithm, masking, agent_config, seed, penalty, log_every)
        spaces = enumerate_agents(config)
        agents = [
            make_agent(algorithm, config.state_size, len(space), self.agent_config,
                       seed * AGENT_SEED_STRIDE + i)
            for i, space in enumerate(spaces)
        ]
        self.pool = AgentPool(config, spaces, agents)
        self.env = self.make_env(spaces)

    @property
    def agents(self):
        return self.pool.agents

    def _masks(self, info: Dict[str, Any]) -> List[np.ndarray]:
        if not self.masking:
            return [self._open_mask(len(space)) for space in self.pool.spaces]
        return info["action_mask"]

    def _propose(self, vec: np.ndarray, masks: List[np.ndarray], greedy: bool):
        proposals, log_probs = [], []
        for agent, mask in zip(self.agents, masks):
            if self.is_dqn:
                proposals.append(agent.act(vec, mask, greedy=greedy))
                log_probs.append(0.0)
            else:
                z, log_prob = agent.act(vec, mask, greedy=greedy)
                proposals.append(z)
                log_probs.append(log_prob)
        return proposals, log_probs

    def _coordinate(self, state: FactoryState, proposals: List[int], greedy: bool):
        if not self.masking:
            return self.pool.joint_action(proposals), list(proposals), False
        return coordinate(state, self.pool, proposals, self.rng, greedy=greedy)

    def run_episode(self, episode: int) -> EpisodeRecord:
        began = time.perf_counter()
        attempts = self.env.infeasible_attempts
        sfc_before = self.pool.sfc_invocations
        vec, info = self.env.reset()
        state = info["state"]
        masks = self._masks(info)
        if self.is_dqn:
            epsilon = self._epsilon.value(episode)
            for agent in self.agents:
                agent.epsilon = epsilon

        n = len(self.agents)
        total = 0.0
        losses: Dict[str, List[float]] = {}
        done = False
        while not done:
            proposals, log_probs = self._propose(vec, masks, greedy=False)
            values = [0.0] * n if self.is_dqn else [a.value(vec) for a in self.agents]
            joint, executed, _ = self._coordinate(state, proposals, greedy=False)

            if self.masking and check_action(state, joint, self.config) is not None:
                self.log.infeasible_executed += 1
                logger.error(f"Infeasible joint action reached the environment at clock "
                             f"{state.clock}")
            clock = state.clock
            next_vec, reward, terminated, truncated, info = self.env.step(executed)
            done = terminated or truncated
            state = info["state"]
            total += reward
            self.steps += 1
            next_masks = self._masks(info)

            for i, agent in enumerate(self.agents):
                z = executed[i]
                if self.is_dqn:
                    agent.remember(vec, z, reward, next_vec, done, masks[i], next_masks[i])
                    loss = agent.learn()
                    if loss is not None:
                        losses.setdefault(f"loss_{i + 1}", []).append(loss)
                    continue
                log_prob = log_probs[i]
                if z != proposals[i]:
                    log_prob = agent.log_prob(vec, z, masks[i])
                agent.remember(vec, z, log_prob, values[i], reward, done, masks[i])

            if not self.is_dqn and self.agents[0].ready():
                for i, agent in enumerate(self.agents):
                    stats = agent.learn(0.0 if done else agent.value(next_vec))
                    losses.setdefault(f"policy_loss_{i + 1}", []).append(stats.policy_loss)
                    losses.setdefault(f"value_loss_{i + 1}", []).append(stats.value_loss)
            logger.debug(f"Clock {clock}: proposals {proposals} executed {executed}")
            vec, masks = next_vec, next_masks

        if self.is_dqn:
            exploration = self.agents[0].epsilon
        else:
            entropies = [a.last_stats.entropy for a in self.agents if a.last_stats is not None]
            exploration = float(np.mean(entropies)) if entropies else float("nan")
        return EpisodeRecord(
            episode=episode + 1,
            k_end=state.clock,
            reward=total,
            finished=state.all_finished,
            losses={k: float(np.mean(v)) for k, v in losses.items()},
            exploration=exploration,
            sfc_invocations=self.pool.sfc_invocations - sfc_before,
            infeasible_attempts=self.env.infeasible_attempts - attempts,
            wall_clock=time.perf_counter() - began,
        )

    def rollout(self, start: Optional[FactoryState] = None) -> Rollout:
        """Decentralized greedy execution: per-agent argmax plus the coordinator."""
        began = time.perf_counter()
        env = self.make_env(self.pool.spaces)
        vec, info = env.reset(options={"state": start})
        state = info["state"]
        schedule, total = [], 0.0
        while not state.done:
            proposals, _ = self._propose(vec, self._masks(info), greedy=True)
            _, executed, _ = self._coordinate(state, proposals, greedy=True)
            clock = state.clock
            vec, reward, _, _, info = env.step(executed)
            schedule.append((clock, info["assignment"]))
            state = info["state"]
            total += reward
        return Rollout(k_end=state.clock, reward=total, finished=state.all_finished,
                       schedule=schedule, elapsed=time.perf_counter() - began)

    def checkpoint_payload(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "mode": self.mode,
            "masking": self.masking,
            "seed": self.seed,
            "instance": self.config.name,
            "num_actions": [len(space) for space in self.pool.spaces],
            "agents": [agent.state_dict() for agent in self.agents],
        }

    def load_payload(self, payload: Dict[str, Any]):
        expected = [len(space) for space in self.pool.spaces]
        if payload["num_actions"] != expected:
            raise ValueError(
                f"checkpoint agent spaces {payload['num_actions']} do not match instance {expected}"
            )
        for agent, data in zip(self.agents, payload["agents"]):
            agent.load_state_dict(data)


def marl_train(config: FactoryConfig, algorithm: str, episodes: int, masking: bool = True,
               agent_config: Optional[AgentConfig] = None, seed: int = 0) -> TrainingLog:
    """Train a fresh agent pool on `config` and return its episode log."""
    trainer = MultiAgentTrainer(config, algorithm, masking=masking,
                                agent_config=agent_config, seed=seed)
    return trainer.train(episodes)
