"""Exact minimum-makespan search by depth-first branch-and-bound."""

import logging
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.actions.action_space import CentralizedActionSpace, enumerate_centralized
from src.factory.config import FactoryConfig
from src.factory.constraints import FEASIBLE, batch_violations
from src.factory.dynamics import transition
from src.factory.state import FactoryState, TaskAssignment, reset

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10 ** 8


class SearchBudgetExceeded(RuntimeError):
    """The node budget ran out before optimality was proven."""


def node_budget() -> int:
    return int(os.environ.get("GALBP_NODE_BUDGET", DEFAULT_NODE_BUDGET))


@dataclass
class SolveResult:
    k_opt: Optional[int]
    schedule: List[Tuple[int, TaskAssignment]] = field(default_factory=list)
    nodes_expanded: int = 0
    start_clock: int = 0
    elapsed: float = 0.0

    @property
    def feasible(self) -> bool:
        """False when no action sequence finishes every task within the horizon."""
        return self.k_opt is not None

    def assignments(self) -> List[Tuple[int, int, int]]:
        """(clock, workstation, task) rows of the schedule, 0-based."""
        rows = []
        for clock, action in self.schedule:
            for i, j in zip(*np.nonzero(action)):
                rows.append((clock, int(i), int(j)))
        return rows


def lower_bound(state: FactoryState, config: FactoryConfig) -> int:
    """Admissible bound on the time steps still needed to finish every task.

    A running task needs its remaining duration. An unstarted task needs one
    assignment step plus its fastest duration, after its slowest unfinished
    predecessor is done.
    """
    n_j = config.num_tasks
    fastest = config.durations.min(axis=0)
    running = state.executing.sum(axis=0) > 0
    remaining = state.remaining.max(axis=0)
    memo: Dict[int, int] = {}

    def earliest_finish(j: int) -> int:
        if j in memo:
            return memo[j]
        if state.finished[j]:
            value = 0
        elif running[j]:
            value = int(remaining[j])
        else:
            preds = np.flatnonzero(config.precedence[j] == -1)
            ready = max((earliest_finish(int(p)) for p in preds), default=0)
            value = ready + 1 + int(fastest[j])
        memo[j] = value
        return value

    return max((earliest_finish(j) for j in range(n_j)), default=0)


class BranchAndBoundSolver:
    """Minimum ending time over all feasible action sequences within the horizon.

    Phase one finds the optimum exploring larger assignments first; phase two
    recovers the lexicographically smallest optimal action-index sequence as
    the certificate.
    """

    def __init__(self, config: FactoryConfig, space: Optional[CentralizedActionSpace] = None,
                 budget: Optional[int] = None):
        self.config = config
        self.space = space or enumerate_centralized(config)
        self.budget = node_budget() if budget is None else budget
        sizes = self.space.matrices.sum(axis=(1, 2))
        indices = np.arange(len(self.space))
        self._greedy_order = np.lexsort((indices, -sizes))
        self.nodes = 0

    def _feasible(self, state: FactoryState) -> np.ndarray:
        return batch_violations(state, self.space.matrices, self.config) == FEASIBLE

    def _expand(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise SearchBudgetExceeded(
                f"node budget {self.budget} exhausted before optimality was proven"
            )

    def _search_optimum(self, start: FactoryState) -> Optional[int]:
        best = self.config.horizon + 1
        visited = set()

        def dfs(state: FactoryState):
            nonlocal best
            self._expand()
            if state.all_finished:
                best = min(best, state.clock)
                return
            if state.done:
                return
            key = state.key()
            if key in visited:
                return
            visited.add(key)
            if state.clock + lower_bound(state, self.config) >= best:
                return
            feasible = self._feasible(state)
            for z in self._greedy_order:
                if feasible[z]:
                    nxt, _, _ = transition(state, self.space.decode(z), self.config, validate=False)
                    dfs(nxt)

        dfs(start)
        return best if best <= self.config.horizon else None

    def _search_certificate(self, start: FactoryState, target: int) -> List[Tuple[int, int]]:
        dead = set()

        def dfs(state: FactoryState, path: List[Tuple[int, int]]) -> Optional[List[Tuple[int, int]]]:
            self._expand()
            if state.all_finished:
                return path if state.clock == target else None
            if state.done or state.clock + lower_bound(state, self.config) > target:
                return None
            key = state.key()
            if key in dead:
                return None
            feasible = self._feasible(state)
            for z in np.flatnonzero(feasible):
                nxt, _, _ = transition(state, self.space.decode(z), self.config, validate=False)
                found = dfs(nxt, path + [(state.clock, int(z))])
                if found is not None:
                    return found
            dead.add(key)
            return None

        found = dfs(start, [])
        assert found is not None, "certificate search failed for a proven optimum"
        return found

    def solve(self, start: Optional[FactoryState] = None) -> SolveResult:
        start = start if start is not None else reset(self.config)
        began = time.perf_counter()
        self.nodes = 0
        k_opt = self._search_optimum(start)
        schedule: List[Tuple[int, TaskAssignment]] = []
        if k_opt is not None:
            path = self._search_certificate(start, k_opt)
            schedule = [(clock, self.space.decode(z)) for clock, z in path]
        elapsed = time.perf_counter() - began
        logger.info(f"Solved {self.config.name} from clock {start.clock}: k_opt={k_opt}, "
                    f"nodes={self.nodes}, {elapsed:.2f}s")
        return SolveResult(k_opt=k_opt, schedule=schedule, nodes_expanded=self.nodes,
                           start_clock=start.clock, elapsed=elapsed)


def solve(config: FactoryConfig, start: Optional[FactoryState] = None,
          space: Optional[CentralizedActionSpace] = None,
          budget: Optional[int] = None) -> SolveResult:
    return BranchAndBoundSolver(config, space=space, budget=budget).solve(start)


def replay(config: FactoryConfig, result: SolveResult,
           start: Optional[FactoryState] = None) -> FactoryState:
    """Re-run a certificate schedule through the validated transition."""
    state = start.copy() if start is not None else reset(config)
    for clock, action in result.schedule:
        if clock != state.clock:
            raise ValueError(f"schedule step at clock {clock} but state is at {state.clock}")
        state, _, _ = transition(state, action, config)
    return state
