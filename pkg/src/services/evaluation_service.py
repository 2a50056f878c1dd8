"""Checkpoint loading, greedy evaluation and the robustness study."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from src.actions.action_space import CentralizedActionSpace, enumerate_centralized
from src.actions.mask import centralized_mask
from src.agents.checkpoint import load_checkpoint
from src.agents.dqn import DQNConfig
from src.agents.ppo import PPOConfig
from src.factory.config import FactoryConfig
from src.factory.dynamics import transition
from src.factory.state import FactoryState, reset
from src.solver.branch_and_bound import BranchAndBoundSolver, SearchBudgetExceeded

from .marl_service import MultiAgentTrainer
from .training_service import CentralizedTrainer, Trainer

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 5


def build_trainer(config: FactoryConfig, algorithm: str, mode: str, **kwargs) -> Trainer:
    if mode == "central":
        return CentralizedTrainer(config, algorithm, **kwargs)
    if mode == "multi":
        return MultiAgentTrainer(config, algorithm, **kwargs)
    raise ValueError(f"unknown mode {mode!r}, expected 'central' or 'multi'")


def load_trainer(path: Union[str, Path], config: FactoryConfig) -> Trainer:
    """Rebuild the trainer a checkpoint was written from and load its weights."""
    payload = load_checkpoint(path)
    cfg_cls = DQNConfig if payload["algorithm"] == "dqn" else PPOConfig
    agent_config = cfg_cls.from_dict(payload["agents"][0]["config"])
    trainer = build_trainer(config, payload["algorithm"], payload["mode"],
                            masking=payload["masking"], agent_config=agent_config,
                            seed=payload["seed"])
    trainer.load_payload(payload)
    logger.info(f"Loaded {payload['mode']} {payload['algorithm']} checkpoint {path}")
    return trainer


def sample_reachable_state(config: FactoryConfig, rng: np.random.Generator,
                           max_depth: int = DEFAULT_MAX_DEPTH,
                           space: Optional[CentralizedActionSpace] = None) -> FactoryState:
    """Roll uniformly random feasible actions for a random number of steps from reset.

    The depth is drawn uniformly from [0, max_depth]. A step that would end
    the episode is not taken, so the sample is always non-terminal.
    """
    space = space or enumerate_centralized(config)
    depth = int(rng.integers(0, max_depth + 1))
    state = reset(config)
    for _ in range(depth):
        feasible = np.flatnonzero(centralized_mask(state, space, config))
        z = int(rng.choice(feasible))
        nxt, _, done = transition(state, space.decode(z), config)
        if done:
            break
        state = nxt
    return state


@dataclass
class RobustnessSample:
    clock: int
    oracle_k: Optional[int]
    agent_k: Optional[int]
    optimal: bool
    status: str = "ok"  # ok, infeasible, oracle_failed


@dataclass
class RobustnessReport:
    samples: List[RobustnessSample] = field(default_factory=list)

    @property
    def counted(self) -> List[RobustnessSample]:
        return [s for s in self.samples if s.status == "ok"]

    @property
    def num_samples(self) -> int:
        return len(self.counted)

    @property
    def excluded_infeasible(self) -> int:
        return sum(1 for s in self.samples if s.status == "infeasible")

    @property
    def oracle_failures(self) -> int:
        return sum(1 for s in self.samples if s.status == "oracle_failed")

    @property
    def optimal_count(self) -> int:
        return sum(1 for s in self.counted if s.optimal)

    @property
    def fraction_optimal(self) -> float:
        if not self.num_samples:
            return 0.0
        return self.optimal_count / self.num_samples

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [vars(s) for s in self.samples],
            columns=["clock", "oracle_k", "agent_k", "optimal", "status"],
        )

    def summary(self) -> dict:
        return {
            "samples": self.num_samples,
            "optimal": self.optimal_count,
            "fraction_optimal": self.fraction_optimal,
            "excluded_infeasible": self.excluded_infeasible,
            "oracle_failures": self.oracle_failures,
        }


def robustness_test(trainer: Trainer, config: FactoryConfig, n_samples: int,
                    rng: np.random.Generator, max_depth: int = DEFAULT_MAX_DEPTH,
                    budget: Optional[int] = None) -> RobustnessReport:
    """Compare greedy rollouts with the oracle optimum from random reachable states.

    States from which no completion fits in the horizon are excluded and
    counted; oracle budget exhaustion is logged and counted per sample.
    """
    space = enumerate_centralized(config)
    solver = BranchAndBoundSolver(config, space=space, budget=budget)
    report = RobustnessReport()
    for n in range(n_samples):
        state = sample_reachable_state(config, rng, max_depth, space)
        try:
            oracle = solver.solve(state)
        except SearchBudgetExceeded as e:
            logger.error(f"Sample {n + 1}: oracle failed: {e}")
            report.samples.append(RobustnessSample(state.clock, None, None, False, "oracle_failed"))
            continue
        if not oracle.feasible:
            report.samples.append(RobustnessSample(state.clock, None, None, False, "infeasible"))
            continue
        rollout = trainer.rollout(state)
        agent_k = rollout.k_end if rollout.finished else None
        report.samples.append(RobustnessSample(
            state.clock, oracle.k_opt, agent_k, agent_k == oracle.k_opt))
    logger.info(f"Robustness: {report.optimal_count}/{report.num_samples} optimal "
                f"({100 * report.fraction_optimal:.1f}%), {report.excluded_infeasible} excluded, "
                f"{report.oracle_failures} oracle failures")
    return report
