"""Long training experiments on the 3x5 reference instance.

Every test here is marked slow. Runs are shared per module so each manifest
trains once.
"""

import os

import numpy as np
import pytest

from conftest import INSTANCE_DIR
from src.factory import load_instance
from src.services import (
    RunManifest,
    compare_runs,
    load_trainer,
    robustness_test,
    run_training,
)
from src.services.evaluation_service import build_trainer

pytestmark = pytest.mark.slow

WS3_TASKS5 = os.path.join(INSTANCE_DIR, "ws3_tasks5.json")
SEEDS = [0, 1, 2, 3, 4]
PPO_EPISODES = 2000
DQN_EPISODES = 12000
K_OPT = 11


@pytest.fixture(scope="module")
def train(tmp_path_factory):
    cache = {}

    def run(algorithm, mode="central", masking=True, episodes=PPO_EPISODES):
        key = (algorithm, mode, masking)
        if key not in cache:
            manifest = RunManifest(instance=WS3_TASKS5, algorithm=algorithm, mode=mode,
                                   masking=masking, seeds=SEEDS, episodes=episodes,
                                   output_dir=str(tmp_path_factory.mktemp("_".join(
                                       [mode, algorithm, str(masking)]))))
            cache[key] = (manifest.output_dir, run_training(manifest))
        return cache[key]

    return run


def converged(results):
    return [r for r in results if r.convergence_episode is not None]


def test_masked_ppo_reaches_optimum(train):
    _, results = train("ppo")
    assert all(r.k_opt == K_OPT for r in results)
    assert len(converged(results)) >= 3
    assert all(r.convergence_episode <= PPO_EPISODES for r in converged(results))
    assert all(r.infeasible_executed == 0 for r in results)


def test_unmasked_ppo_does_not_converge(train):
    _, results = train("ppo", masking=False)
    assert len(converged(results)) <= 1


def test_multi_agent_ppo_reaches_optimum(train):
    _, results = train("ppo", mode="multi")
    assert len(converged(results)) >= 3
    # coordination repairs every joint action before it reaches the factory
    assert all(r.infeasible_executed == 0 for r in results)


@pytest.mark.parametrize("mode", ["central", "multi"])
def test_masked_dqn_reaches_optimum(train, mode):
    _, results = train("dqn", mode=mode, episodes=DQN_EPISODES)
    assert len(converged(results)) >= 3
    assert all(r.convergence_episode <= DQN_EPISODES for r in converged(results))


def test_trained_policy_is_robust(train):
    _, results = train("ppo")
    config = load_instance(WS3_TASKS5)
    best = min(converged(results), key=lambda r: r.convergence_episode)
    trainer = load_trainer(best.best_checkpoint, config)
    report = robustness_test(trainer, config, 200, np.random.default_rng(0))
    assert report.oracle_failures == 0
    assert report.fraction_optimal >= 0.85

    untrained = build_trainer(config, "ppo", "central", seed=0)
    baseline = robustness_test(untrained, config, 200, np.random.default_rng(0))
    assert baseline.fraction_optimal < report.fraction_optimal


def test_ppo_converges_before_dqn(train):
    ppo_dir, _ = train("ppo")
    dqn_dir, _ = train("dqn", episodes=DQN_EPISODES)
    frame = compare_runs([dqn_dir, ppo_dir])
    assert frame["run"].tolist() == ["central_ppo_masked", "central_dqn_masked"]
    ppo, dqn = frame["median_episode"].tolist()
    assert np.isfinite(ppo) and ppo < dqn
