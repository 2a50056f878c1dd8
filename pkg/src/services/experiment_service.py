"""Run manifests and the seeded training harness that writes CSVs, checkpoints and summaries."""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from src.actions.action_space import ActionSpaceTooLarge
from src.agents.checkpoint import save_checkpoint
from src.database.db import Database
from src.factory.config import FactoryConfig, load_instance
from src.solver.branch_and_bound import SearchBudgetExceeded, solve

from .data_service import DataService
from .evaluation_service import build_trainer
from .report_service import convergence_comparison
from .training_service import (
    DEFAULT_PENALTY,
    PROGRESS_EVERY,
    EpisodeRecord,
    convergence_episode,
    default_agent_config,
    trailing_median,
)

logger = logging.getLogger(__name__)

DEFAULT_EPISODES = 2000
# Candidate best checkpoints are considered every this many episodes
BEST_CHECK_EVERY = 10


def episode_budget(default: int = DEFAULT_EPISODES) -> int:
    return int(os.environ.get("GALBP_EPISODES", default))


@dataclass
class RunManifest:
    instance: str
    algorithm: str = "ppo"
    mode: str = "central"
    masking: bool = True
    seeds: List[int] = field(default_factory=lambda: [0])
    episodes: int = DEFAULT_EPISODES
    output_dir: str = "runs"
    agent_overrides: Dict[str, Any] = field(default_factory=dict)
    penalty: float = DEFAULT_PENALTY
    log_every: int = PROGRESS_EVERY

    def __post_init__(self):
        if self.algorithm not in ("dqn", "ppo"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.mode not in ("central", "multi"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.episodes < 0:
            raise ValueError("episode budget must be nonnegative")
        if not self.seeds:
            raise ValueError("manifest needs at least one seed")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown manifest fields: {sorted(unknown)}")
        return cls(**data)

    @property
    def run_name(self) -> str:
        masking = "masked" if self.masking else "unmasked"
        return f"{self.mode}_{self.algorithm}_{masking}"


@dataclass
class SeedResult:
    seed: int
    metrics_path: str
    k_opt: Optional[int]
    episodes: int
    convergence_episode: Optional[int] = None
    best_k_end: Optional[int] = None
    final_median: Optional[float] = None
    sfc_invocations: int = 0
    infeasible_executed: int = 0
    final_checkpoint: Optional[str] = None
    best_checkpoint: Optional[str] = None
    run_id: Optional[int] = None


def oracle_k_opt(config: FactoryConfig, db: Optional[Database] = None) -> Optional[int]:
    """Exact optimum from reset, or None when the oracle cannot run on this instance."""
    try:
        result = solve(config)
    except (ActionSpaceTooLarge, SearchBudgetExceeded) as e:
        logger.warning(f"No oracle reference for {config.name}: {e}")
        return None
    if db is not None:
        with db.session() as session:
            DataService(session).save_solve(config.name, result)
    return result.k_opt


def _train_seed(manifest: RunManifest, config: FactoryConfig, seed: int,
                k_opt: Optional[int], out_dir: Path, db: Optional[Database]) -> SeedResult:
    agent_config = default_agent_config(manifest.algorithm, manifest.mode == "multi",
                                        manifest.agent_overrides)
    trainer = build_trainer(config, manifest.algorithm, manifest.mode,
                            masking=manifest.masking, agent_config=agent_config, seed=seed,
                            penalty=manifest.penalty, log_every=manifest.log_every)
    result = SeedResult(seed=seed, metrics_path=str(out_dir / f"metrics_seed{seed}.csv"),
                        k_opt=k_opt, episodes=manifest.episodes)

    run_id = None
    if db is not None:
        with db.session() as session:
            run_id = DataService(session).create_run(
                config.name, manifest.algorithm, manifest.mode, manifest.masking, seed,
                manifest.episodes, k_opt=k_opt, output_dir=str(out_dir),
                config=agent_config.to_dict(),
            ).id
    result.run_id = run_id

    best = {"median": None}
    best_path = out_dir / f"best_seed{seed}.json"

    def keep_best(record: EpisodeRecord):
        if record.episode % BEST_CHECK_EVERY:
            return
        median = trailing_median(trainer.log.k_ends)
        if best["median"] is None or median < best["median"]:
            best["median"] = median
            save_checkpoint(best_path, trainer.checkpoint_payload())
            result.best_checkpoint = str(best_path)

    try:
        log = trainer.train(manifest.episodes, callback=keep_best)
    except Exception:
        if db is not None and run_id is not None:
            with db.session() as session:
                DataService(session).finish_run(run_id, status="failed")
        raise

    frame = log.to_frame()
    frame["k_opt"] = k_opt
    frame.to_csv(result.metrics_path, index=False)

    if k_opt is not None:
        below = [r.episode for r in log.records if r.finished and r.k_end < k_opt]
        if below:
            logger.error(f"Episodes {below[:5]} finished before the oracle optimum {k_opt}")

    if manifest.episodes > 0:
        final_path = out_dir / f"final_seed{seed}.json"
        save_checkpoint(final_path, trainer.checkpoint_payload())
        result.final_checkpoint = str(final_path)

    finished = [r.k_end for r in log.records if r.finished]
    result.best_k_end = min(finished) if finished else None
    result.convergence_episode = convergence_episode(log.k_ends, k_opt)
    result.final_median = trailing_median(log.k_ends)
    result.sfc_invocations = log.sfc_invocations
    result.infeasible_executed = log.infeasible_executed

    if db is not None and run_id is not None:
        with db.session() as session:
            service = DataService(session)
            service.add_episodes(run_id, log.records)
            service.finish_run(run_id, convergence_episode=result.convergence_episode,
                               best_k_end=result.best_k_end,
                               sfc_invocations=result.sfc_invocations,
                               infeasible_executed=result.infeasible_executed)
    logger.info(f"Seed {seed} done: convergence episode {result.convergence_episode}, "
                f"best k_end {result.best_k_end}, k_opt {k_opt}")
    return result


def run_training(manifest: RunManifest, db: Optional[Database] = None) -> List[SeedResult]:
    """Train every seed of the manifest and write its artifacts into the output directory.

    Layout: manifest.json, metrics_seed<n>.csv, best_seed<n>.json,
    final_seed<n>.json and summary.json.
    """
    config = load_instance(manifest.instance)
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)

    k_opt = oracle_k_opt(config, db)
    results = [_train_seed(manifest, config, seed, k_opt, out_dir, db)
               for seed in manifest.seeds]

    summary = {
        "instance": config.name,
        "run": manifest.run_name,
        "k_opt": k_opt,
        "seeds": [asdict(r) for r in results],
        "converged_seeds": sum(1 for r in results if r.convergence_episode is not None),
        "sfc_invocations": sum(r.sfc_invocations for r in results),
        "infeasible_executed": sum(r.infeasible_executed for r in results),
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    return results


def compare_runs(run_dirs: Sequence[Union[str, Path]]) -> pd.DataFrame:
    """Convergence comparison of finished runs, read from their summary.json files."""
    runs: Dict[str, List[Optional[int]]] = {}
    for run_dir in run_dirs:
        path = Path(run_dir) / "summary.json"
        with open(path, encoding="utf-8") as fh:
            summary = json.load(fh)
        name = summary["run"]
        if name in runs:
            name = f"{name} ({Path(run_dir).name})"
        runs[name] = [seed["convergence_episode"] for seed in summary["seeds"]]
    return convergence_comparison(runs)
