"""Service for saving training runs and solver results to the journal."""

import json
import logging
import math
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional

from sqlalchemy import func
from sqlalchemy.orm import Session

from src.database.models import EpisodeResult, SolveRecord, TrainingRun

logger = logging.getLogger(__name__)


def _clean(value: Optional[float]) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


class DataService:
    """Service for saving and retrieving run-journal data."""

    def __init__(self, session: Session):
        self.session = session

    def create_run(self, instance: str, algorithm: str, mode: str, masking: bool, seed: int,
                   episode_budget: int, k_opt: Optional[int] = None,
                   output_dir: Optional[str] = None,
                   config: Optional[Dict[str, Any]] = None) -> TrainingRun:
        run = TrainingRun(
            instance=instance,
            algorithm=algorithm,
            mode=mode,
            masking=masking,
            seed=seed,
            episode_budget=episode_budget,
            k_opt=k_opt,
            output_dir=output_dir,
            config_json=json.dumps(config) if config is not None else None,
            status="running",
        )
        self.session.add(run)
        self.session.flush()
        logger.debug(f"Created run {run.id}")
        return run

    def add_episodes(self, run_id: int, records: Iterable) -> int:
        """Store EpisodeRecord-like objects for a run; returns how many were added."""
        added = 0
        for record in records:
            self.session.add(EpisodeResult(
                run_id=run_id,
                episode=record.episode,
                k_end=record.k_end,
                reward=float(record.reward),
                finished=bool(record.finished),
                losses_json=json.dumps({k: _clean(v) for k, v in record.losses.items()}),
                exploration=_clean(record.exploration),
                sfc_invocations=record.sfc_invocations,
                wall_clock=record.wall_clock,
            ))
            added += 1
        self.session.flush()
        return added

    def finish_run(self, run_id: int, status: str = "completed",
                   convergence_episode: Optional[int] = None,
                   best_k_end: Optional[int] = None, sfc_invocations: int = 0,
                   infeasible_executed: int = 0) -> Optional[TrainingRun]:
        run = self.session.get(TrainingRun, run_id)
        if run is None:
            logger.error(f"Run {run_id} not found")
            return None
        run.status = status
        run.convergence_episode = convergence_episode
        run.best_k_end = best_k_end
        run.sfc_invocations = sfc_invocations
        run.infeasible_executed = infeasible_executed
        run.finished_at = datetime.utcnow()
        return run

    def save_solve(self, instance: str, result) -> SolveRecord:
        record = SolveRecord(
            instance=instance,
            k_opt=result.k_opt,
            feasible=result.feasible,
            nodes_expanded=result.nodes_expanded,
            start_clock=result.start_clock,
            elapsed=result.elapsed,
        )
        self.session.add(record)
        self.session.flush()
        return record

    def list_runs(self, instance: Optional[str] = None) -> List[TrainingRun]:
        query = self.session.query(TrainingRun)
        if instance:
            query = query.filter_by(instance=instance)
        return query.order_by(TrainingRun.id.desc()).all()

    def get_run(self, run_id: int) -> Optional[TrainingRun]:
        return self.session.get(TrainingRun, run_id)

    def list_solves(self) -> List[SolveRecord]:
        return self.session.query(SolveRecord).order_by(SolveRecord.id.desc()).all()

    def get_stats(self) -> Dict[str, int]:
        """Get journal statistics."""
        return {
            "runs": self.session.query(TrainingRun).count(),
            "completed_runs": (self.session.query(TrainingRun)
                               .filter_by(status="completed").count()),
            "episodes": self.session.query(EpisodeResult).count(),
            "solves": self.session.query(SolveRecord).count(),
            "instances": (self.session.query(func.count(func.distinct(TrainingRun.instance)))
                          .scalar()),
        }
