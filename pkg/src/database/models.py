"""SQLAlchemy models for the training-run journal."""

from datetime import datetime
from typing import List, Optional

from sqlalchemy import (
    Boolean, DateTime, Float, ForeignKey, Integer, String, Text, UniqueConstraint
)
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    """Base class for all models."""
    pass


class TrainingRun(Base):
    """One (instance, algorithm, mode, masking, seed) training run."""
    __tablename__ = "training_runs"

    id: Mapped[int] = mapped_column(primary_key=True)
    instance: Mapped[str] = mapped_column(String(200), index=True)
    algorithm: Mapped[str] = mapped_column(String(10))      # dqn / ppo
    mode: Mapped[str] = mapped_column(String(10))           # central / multi
    masking: Mapped[bool] = mapped_column(Boolean, default=True)
    seed: Mapped[int] = mapped_column(Integer)
    episode_budget: Mapped[int] = mapped_column(Integer)
    k_opt: Mapped[Optional[int]] = mapped_column(Integer)
    convergence_episode: Mapped[Optional[int]] = mapped_column(Integer)
    best_k_end: Mapped[Optional[int]] = mapped_column(Integer)
    sfc_invocations: Mapped[int] = mapped_column(Integer, default=0)
    infeasible_executed: Mapped[int] = mapped_column(Integer, default=0)
    status: Mapped[str] = mapped_column(String(20), default="running")  # running, completed, failed
    output_dir: Mapped[Optional[str]] = mapped_column(String(500))
    config_json: Mapped[Optional[str]] = mapped_column(Text)
    started_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow)
    finished_at: Mapped[Optional[datetime]] = mapped_column(DateTime)

    episodes: Mapped[List["EpisodeResult"]] = relationship(
        back_populates="run", cascade="all, delete-orphan", order_by="EpisodeResult.episode"
    )

    def __repr__(self):
        return f"<TrainingRun {self.id} {self.mode}/{self.algorithm} seed={self.seed}>"


class EpisodeResult(Base):
    """Per-episode metrics of a run."""
    __tablename__ = "episode_results"

    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("training_runs.id"))
    episode: Mapped[int] = mapped_column(Integer)
    k_end: Mapped[int] = mapped_column(Integer)
    reward: Mapped[float] = mapped_column(Float)
    finished: Mapped[bool] = mapped_column(Boolean, default=False)
    losses_json: Mapped[Optional[str]] = mapped_column(Text)
    exploration: Mapped[Optional[float]] = mapped_column(Float)
    sfc_invocations: Mapped[int] = mapped_column(Integer, default=0)
    wall_clock: Mapped[float] = mapped_column(Float, default=0.0)

    run: Mapped["TrainingRun"] = relationship(back_populates="episodes")

    __table_args__ = (
        UniqueConstraint('run_id', 'episode', name='unique_run_episode'),
    )

    def __repr__(self):
        return f"<EpisodeResult run={self.run_id} ep={self.episode} k_end={self.k_end}>"


class SolveRecord(Base):
    """Exact-solver result for an instance."""
    __tablename__ = "solve_records"

    id: Mapped[int] = mapped_column(primary_key=True)
    instance: Mapped[str] = mapped_column(String(200), index=True)
    k_opt: Mapped[Optional[int]] = mapped_column(Integer)
    feasible: Mapped[bool] = mapped_column(Boolean)
    nodes_expanded: Mapped[int] = mapped_column(Integer)
    start_clock: Mapped[int] = mapped_column(Integer, default=0)
    elapsed: Mapped[float] = mapped_column(Float)
    solved_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow)

    def __repr__(self):
        return f"<SolveRecord {self.instance} k_opt={self.k_opt}>"
