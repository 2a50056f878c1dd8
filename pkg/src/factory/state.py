"""Factory simulation state s[k] and its flat network encoding."""

from dataclasses import dataclass
from typing import List

import numpy as np

from .config import FactoryConfig

# A task assignment a[k] is an (I, J) binary matrix; row i is agent i's action.
TaskAssignment = np.ndarray


@dataclass
class FactoryState:
    """Mutable state: o, d, r, e, f, g, b, h and the clock k."""
    clock: int
    occupancies: np.ndarray   # (I,)
    remaining: np.ndarray     # (I, J)
    allocated: np.ndarray     # (I, J, R)
    executing: np.ndarray     # (I, J) in {0, 1}
    finished: np.ndarray      # (J,) in {0, 1}
    inventories: np.ndarray   # (R,)
    buffers: np.ndarray       # (I, R)
    done: bool = False

    def copy(self) -> "FactoryState":
        return FactoryState(
            clock=self.clock,
            occupancies=self.occupancies.copy(),
            remaining=self.remaining.copy(),
            allocated=self.allocated.copy(),
            executing=self.executing.copy(),
            finished=self.finished.copy(),
            inventories=self.inventories.copy(),
            buffers=self.buffers.copy(),
            done=self.done,
        )

    @property
    def all_finished(self) -> bool:
        return bool(self.finished.all())

    def key(self) -> bytes:
        """Canonical hashable key (clock included) for search memoization.

        Occupancies, allocations and buffers are functions of (remaining,
        executing, finished), so those three plus the clock and inventories
        identify the state.
        """
        return b"".join((
            np.int64(self.clock).tobytes(),
            self.remaining.astype(np.int32).tobytes(),
            self.executing.astype(np.int8).tobytes(),
            self.finished.astype(np.int8).tobytes(),
            self.inventories.astype(np.int64).tobytes(),
        ))

    def check_invariants(self, config: FactoryConfig) -> List[str]:
        """Return the list of violated state invariants (empty when consistent)."""
        problems = []
        e = self.executing
        if not np.array_equal(self.occupancies, e.sum(axis=1)):
            problems.append("occupancies != sum_j executing")
        if not np.array_equal(self.buffers, self.allocated.sum(axis=1)):
            problems.append("buffers != sum_j allocated")
        if ((e == 1) & (self.remaining < 1)).any():
            problems.append("executing task with remaining < 1")
        if ((self.finished == 1) & (e.sum(axis=0) > 0)).any():
            problems.append("finished task still executing")
        if (e.sum(axis=0) > 1).any():
            problems.append("task executing on more than one workstation")
        if self.done != (self.all_finished or self.clock >= config.horizon):
            problems.append("done flag inconsistent with finished flags / horizon")
        if (self.occupancies > config.occupancy_caps).any():
            problems.append("occupancy above cap")
        if (self.buffers > config.buffer_caps).any():
            problems.append("buffer above cap")
        if (self.inventories < 0).any():
            problems.append("negative inventory")

        held = self.inventories + self.allocated.sum(axis=(0, 1))
        if not config.returnable_resources:
            held = held + (self.finished[:, None] * config.resource_needs).sum(axis=0)
        if not np.array_equal(held, config.inventories):
            problems.append("resource conservation violated")
        return problems


def reset(config: FactoryConfig) -> FactoryState:
    """Initial state: everything zero except the factory inventories G."""
    n_i, n_j, n_r = config.num_workstations, config.num_tasks, config.num_resources
    return FactoryState(
        clock=0,
        occupancies=np.zeros(n_i, dtype=np.int64),
        remaining=np.zeros((n_i, n_j), dtype=np.int64),
        allocated=np.zeros((n_i, n_j, n_r), dtype=np.int64),
        executing=np.zeros((n_i, n_j), dtype=np.int64),
        finished=np.zeros(n_j, dtype=np.int64),
        inventories=config.inventories.copy(),
        buffers=np.zeros((n_i, n_r), dtype=np.int64),
        done=False,
    )


def null_action(config: FactoryConfig) -> TaskAssignment:
    return np.zeros((config.num_workstations, config.num_tasks), dtype=np.int64)


def resource_assignment(action: TaskAssignment, num_resources: int) -> np.ndarray:
    """Implied resource action y(i, j, r) = a(i, j) for every resource r."""
    return np.repeat(np.asarray(action)[:, :, None], num_resources, axis=2)


def flatten_state(state: FactoryState, config: FactoryConfig) -> np.ndarray:
    """Concatenate [o; d; r] (row-major) scaled to roughly [0, 1]."""
    o_scale = max(int(config.occupancy_caps.max()), 1)
    d_scale = max(int(config.durations.max()), 1)
    r_scale = max(int(config.resource_needs.max()), 1) if config.resource_needs.size else 1
    return np.concatenate((
        state.occupancies.ravel() / o_scale,
        state.remaining.ravel() / d_scale,
        state.allocated.ravel() / r_scale,
    )).astype(np.float64)
