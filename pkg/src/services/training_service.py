"""Training loops for the centralized learners and the shared training bookkeeping."""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.actions.action_space import enumerate_centralized
from src.actions.environment import ActionSpaces, AssemblyLineEnv
from src.agents.dqn import DQNAgent, DQNConfig
from src.agents.ppo import PPOAgent, PPOConfig
from src.factory.config import FactoryConfig
from src.factory.state import FactoryState, TaskAssignment

logger = logging.getLogger(__name__)

ALGORITHMS = ("dqn", "ppo")
# Log a progress line every this many episodes
PROGRESS_EVERY = 100
# Reward added when the unmasked baseline picks an infeasible action
DEFAULT_PENALTY = -1.0
CONVERGENCE_WINDOW = 100

AgentConfig = Union[DQNConfig, PPOConfig]


@dataclass
class EpisodeRecord:
    episode: int
    k_end: int
    reward: float
    finished: bool
    losses: Dict[str, float] = field(default_factory=dict)
    exploration: float = float("nan")  # epsilon (DQN) or mean policy entropy (PPO)
    sfc_invocations: int = 0
    infeasible_attempts: int = 0
    wall_clock: float = 0.0

    def as_row(self) -> Dict[str, Any]:
        row = {
            "episode": self.episode,
            "k_end": self.k_end,
            "reward": self.reward,
            "finished": self.finished,
            "exploration": self.exploration,
            "sfc_invocations": self.sfc_invocations,
            "infeasible_attempts": self.infeasible_attempts,
            "wall_clock": self.wall_clock,
        }
        row.update(self.losses)
        return row


BASE_COLUMNS = list(EpisodeRecord(0, 0, 0.0, False).as_row())


@dataclass
class TrainingLog:
    records: List[EpisodeRecord] = field(default_factory=list)
    infeasible_executed: int = 0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def k_ends(self) -> List[int]:
        return [r.k_end for r in self.records]

    @property
    def sfc_invocations(self) -> int:
        return sum(r.sfc_invocations for r in self.records)

    def to_frame(self) -> pd.DataFrame:
        if not self.records:
            return pd.DataFrame(columns=BASE_COLUMNS)
        return pd.DataFrame([r.as_row() for r in self.records])


@dataclass
class Rollout:
    """Greedy evaluation episode."""
    k_end: int
    reward: float
    finished: bool
    schedule: List[Tuple[int, TaskAssignment]]
    elapsed: float

    def assignments(self) -> List[Tuple[int, int, int]]:
        """(clock, workstation, task) triples, 0-based."""
        rows = []
        for clock, action in self.schedule:
            for i, j in zip(*np.nonzero(action)):
                rows.append((clock, int(i), int(j)))
        return rows


def trailing_median(k_ends: List[int], window: int = CONVERGENCE_WINDOW) -> Optional[float]:
    if not k_ends:
        return None
    return float(np.median(k_ends[-window:]))


def convergence_episode(k_ends: List[int], k_opt: Optional[int],
                        window: int = CONVERGENCE_WINDOW) -> Optional[int]:
    """First episode (1-based) whose trailing `window`-episode median reaches k_opt."""
    if k_opt is None or len(k_ends) < window:
        return None
    values = np.asarray(k_ends, dtype=np.float64)
    for end in range(window, values.shape[0] + 1):
        if np.median(values[end - window:end]) <= k_opt:
            return end
    return None


def default_agent_config(algorithm: str, multi_agent: bool = False,
                         overrides: Optional[Dict[str, Any]] = None) -> AgentConfig:
    """Hyperparameter defaults; per-agent networks are narrower than centralized ones."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")
    overrides = dict(overrides or {})
    if algorithm == "dqn":
        base = DQNConfig(hidden=178) if multi_agent else DQNConfig()
        return DQNConfig.from_dict({**base.to_dict(), **overrides})
    base = PPOConfig(hidden=86) if multi_agent else PPOConfig()
    return PPOConfig.from_dict({**base.to_dict(), **overrides})


def make_agent(algorithm: str, state_size: int, num_actions: int, agent_config: AgentConfig,
               seed: int) -> Union[DQNAgent, PPOAgent]:
    if algorithm == "dqn":
        return DQNAgent(state_size, num_actions, agent_config, seed=seed)
    return PPOAgent(state_size, num_actions, agent_config, seed=seed)


class Trainer:
    """Episode loop and logging shared by both training modes."""

    mode = ""

    def __init__(self, config: FactoryConfig, algorithm: str, masking: bool = True,
                 agent_config: Optional[AgentConfig] = None, seed: int = 0,
                 penalty: float = DEFAULT_PENALTY, log_every: int = PROGRESS_EVERY):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")
        self.config = config
        self.algorithm = algorithm
        self.masking = masking
        self.seed = seed
        self.penalty = penalty
        self.log_every = log_every
        self.agent_config = agent_config or default_agent_config(
            algorithm, multi_agent=self.mode == "multi")
        self.rng = np.random.default_rng(seed)
        self.log = TrainingLog()
        self.steps = 0
        self._epsilon = None

    @property
    def is_dqn(self) -> bool:
        return self.algorithm == "dqn"

    def make_env(self, action_spaces: ActionSpaces) -> AssemblyLineEnv:
        """Environment in this trainer's mode; unmasked runs are charged `penalty`."""
        return AssemblyLineEnv(self.config, action_spaces,
                               penalty=None if self.masking else self.penalty)

    def _open_mask(self, size: int) -> np.ndarray:
        return np.ones(size, dtype=bool)

    def run_episode(self, episode: int) -> EpisodeRecord:
        raise NotImplementedError

    def rollout(self, start: Optional[FactoryState] = None) -> Rollout:
        raise NotImplementedError

    def checkpoint_payload(self) -> Dict[str, Any]:
        raise NotImplementedError

    def load_payload(self, payload: Dict[str, Any]):
        raise NotImplementedError

    def train(self, episodes: int,
              callback: Optional[Callable[[EpisodeRecord], None]] = None) -> TrainingLog:
        """Run `episodes` training episodes, appending to `self.log`."""
        if self.is_dqn:
            self._epsilon = self.agent_config.epsilon_schedule(episodes)
        masking = "with" if self.masking else "without"
        logger.info(f"Training {self.mode} {self.algorithm} ({masking} masking) on "
                    f"{self.config.name} for {episodes} episodes, seed {self.seed}")
        for episode in range(episodes):
            record = self.run_episode(episode)
            self.log.records.append(record)
            logger.debug(f"Episode {record.episode}: k_end={record.k_end} "
                         f"reward={record.reward:.3f} losses={record.losses}")
            if (episode + 1) % self.log_every == 0:
                median = trailing_median(self.log.k_ends)
                logger.info(f"Episode {episode + 1}/{episodes}: median k_end {median:.1f}, "
                            f"exploration {record.exploration:.3f}")
            if callback is not None:
                callback(record)
        return self.log


class CentralizedTrainer(Trainer):
    """A single learner over the full enumerated action space A."""

    mode = "central"

    def __init__(self, config: FactoryConfig, algorithm: str, masking: bool = True,
                 agent_config: Optional[AgentConfig] = None, seed: int = 0,
                 penalty: float = DEFAULT_PENALTY, log_every: int = PROGRESS_EVERY):
        super().__init__(config, algorithm, masking, agent_config, seed, penalty, log_every)
        self.space = enumerate_centralized(config)
        self.env = self.make_env(self.space)
        self.agent = make_agent(algorithm, config.state_size, len(self.space),
                                self.agent_config, seed)

    def _mask(self, info: Dict[str, Any]) -> np.ndarray:
        if not self.masking:
            return self._open_mask(len(self.space))
        return info["action_mask"]

    def run_episode(self, episode: int) -> EpisodeRecord:
        began = time.perf_counter()
        attempts = self.env.infeasible_attempts
        vec, info = self.env.reset()
        mask = self._mask(info)
        if self.is_dqn:
            self.agent.epsilon = self._epsilon.value(episode)

        total = 0.0
        losses: Dict[str, List[float]] = {}
        done = False
        while not done:
            if self.is_dqn:
                z = self.agent.act(vec, mask)
            else:
                z, log_prob = self.agent.act(vec, mask)
                value = self.agent.value(vec)
            next_vec, reward, terminated, truncated, info = self.env.step(z)
            done = terminated or truncated
            total += reward
            self.steps += 1
            next_mask = self._mask(info)

            if self.is_dqn:
                self.agent.remember(vec, z, reward, next_vec, done, mask, next_mask)
                loss = self.agent.learn()
                if loss is not None:
                    losses.setdefault("loss", []).append(loss)
            else:
                self.agent.remember(vec, z, log_prob, value, reward, done, mask)
                if self.agent.ready():
                    stats = self.agent.learn(0.0 if done else self.agent.value(next_vec))
                    losses.setdefault("policy_loss", []).append(stats.policy_loss)
                    losses.setdefault("value_loss", []).append(stats.value_loss)
            vec, mask = next_vec, next_mask

        state = info["state"]
        if self.is_dqn:
            exploration = self.agent.epsilon
        else:
            stats = self.agent.last_stats
            exploration = stats.entropy if stats is not None else float("nan")
        return EpisodeRecord(
            episode=episode + 1,
            k_end=state.clock,
            reward=total,
            finished=state.all_finished,
            losses={k: float(np.mean(v)) for k, v in losses.items()},
            exploration=exploration,
            infeasible_attempts=self.env.infeasible_attempts - attempts,
            wall_clock=time.perf_counter() - began,
        )

    def rollout(self, start: Optional[FactoryState] = None) -> Rollout:
        """Greedy episode from `start` (reset by default) without learning."""
        began = time.perf_counter()
        env = self.make_env(self.space)
        vec, info = env.reset(options={"state": start})
        schedule, total = [], 0.0
        while not info["state"].done:
            z = self.agent.act(vec, self._mask(info), greedy=True)
            if not self.is_dqn:
                z = z[0]
            clock = info["clock"]
            vec, reward, _, _, info = env.step(z)
            schedule.append((clock, info["assignment"]))
            total += reward
        state = info["state"]
        return Rollout(k_end=state.clock, reward=total, finished=state.all_finished,
                       schedule=schedule, elapsed=time.perf_counter() - began)

    def checkpoint_payload(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "mode": self.mode,
            "masking": self.masking,
            "seed": self.seed,
            "instance": self.config.name,
            "num_actions": [len(self.space)],
            "agents": [self.agent.state_dict()],
        }

    def load_payload(self, payload: Dict[str, Any]):
        if payload["num_actions"] != [len(self.space)]:
            raise ValueError(
                f"checkpoint has {payload['num_actions']} actions, instance has {len(self.space)}"
            )
        self.agent.load_state_dict(payload["agents"][0])
