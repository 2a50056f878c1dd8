"""Centralized and per-workstation assignment action spaces.

Counting follows the closed forms for the unconstrained space, the
unique-assignment space and the occupancy-constrained space; enumeration
materializes the latter two sets in lexicographic order (index 0 is always
the null action).
"""

import itertools
import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from src.factory.config import FactoryConfig
from src.factory.state import TaskAssignment

logger = logging.getLogger(__name__)

DEFAULT_ACTION_CAP = 10 ** 7


class ActionSpaceTooLarge(RuntimeError):
    """Raised when the centralized space exceeds the materialization cap."""


@dataclass(frozen=True)
class SpaceShape:
    """The parameters action-space sizes depend on: O and |J|."""
    occupancy_caps: Tuple[int, ...]
    num_tasks: int

    @property
    def num_workstations(self) -> int:
        return len(self.occupancy_caps)

    @classmethod
    def of(cls, config: Union["SpaceShape", FactoryConfig]) -> "SpaceShape":
        if isinstance(config, SpaceShape):
            return config
        return cls(tuple(int(c) for c in config.occupancy_caps), config.num_tasks)


def action_cap() -> int:
    return int(os.environ.get("GALBP_ACTION_CAP", DEFAULT_ACTION_CAP))


def count_unconstrained(config) -> int:
    shape = SpaceShape.of(config)
    return 2 ** (shape.num_workstations * shape.num_tasks)


def count_unique_assignment(config) -> int:
    shape = SpaceShape.of(config)
    return (shape.num_workstations + 1) ** shape.num_tasks


def count_occupancy_constrained(config) -> int:
    """Nested binomial sum over workstations with occupancy caps."""
    shape = SpaceShape.of(config)
    caps = shape.occupancy_caps

    @lru_cache(maxsize=None)
    def nested(i: int, free: int) -> int:
        if i == len(caps):
            return 1
        return sum(comb(free, n) * nested(i + 1, free - n)
                   for n in range(min(caps[i], free) + 1))

    return nested(0, shape.num_tasks)


def count_agent_space(config, workstation: int) -> int:
    shape = SpaceShape.of(config)
    cap = shape.occupancy_caps[workstation]
    return sum(comb(shape.num_tasks, n) for n in range(min(cap, shape.num_tasks) + 1))


def agent_rows(num_tasks: int, cap: int) -> np.ndarray:
    """All binary rows of length |J| with at most `cap` ones, lexicographically sorted."""
    rows = []
    for n in range(min(cap, num_tasks) + 1):
        for chosen in itertools.combinations(range(num_tasks), n):
            row = [0] * num_tasks
            for j in chosen:
                row[j] = 1
            rows.append(tuple(row))
    rows.sort()
    return np.array(rows, dtype=np.int8).reshape(len(rows), num_tasks)


class _IndexedSpace:
    """Shared index <-> matrix codec over a stacked array of actions."""

    matrices: np.ndarray

    def _build_index(self):
        self._index: Dict[bytes, int] = {
            m.astype(np.int8).tobytes(): z for z, m in enumerate(self.matrices)
        }

    def __len__(self) -> int:
        return int(self.matrices.shape[0])

    @property
    def size(self) -> int:
        return len(self)


@dataclass
class CentralizedActionSpace(_IndexedSpace):
    """The set A of joint assignment matrices, index z in [0, delta_A)."""
    num_workstations: int
    num_tasks: int
    matrices: np.ndarray = field(repr=False)       # (delta_A, I, J)

    def __post_init__(self):
        self.matrices.setflags(write=False)
        self._build_index()

    def decode(self, index: int) -> TaskAssignment:
        return self.matrices[index].astype(np.int64)

    def encode(self, action: TaskAssignment) -> int:
        key = np.asarray(action).astype(np.int8).tobytes()
        try:
            return self._index[key]
        except KeyError:
            raise ValueError("action is not a member of the centralized action space") from None


@dataclass
class AgentActionSpace(_IndexedSpace):
    """The set A_i of rows workstation i may choose."""
    workstation: int
    num_workstations: int
    rows: np.ndarray = field(repr=False)           # (delta_Ai, J)

    def __post_init__(self):
        self.rows.setflags(write=False)
        embedded = np.zeros((self.rows.shape[0], self.num_workstations, self.rows.shape[1]),
                            dtype=np.int8)
        embedded[:, self.workstation, :] = self.rows
        embedded.setflags(write=False)
        # Each row as a full TaskAssignment with every other row zero.
        self.matrices = embedded
        self._index = {r.tobytes(): z for z, r in enumerate(self.rows)}

    def decode(self, index: int) -> np.ndarray:
        return self.rows[index].astype(np.int64)

    def encode(self, row: np.ndarray) -> int:
        key = np.asarray(row).astype(np.int8).tobytes()
        try:
            return self._index[key]
        except KeyError:
            raise ValueError(
                f"row is not a member of workstation {self.workstation + 1}'s action space"
            ) from None


def enumerate_agent(config, workstation: int) -> AgentActionSpace:
    shape = SpaceShape.of(config)
    rows = agent_rows(shape.num_tasks, shape.occupancy_caps[workstation])
    return AgentActionSpace(workstation=workstation, num_workstations=shape.num_workstations,
                            rows=rows)


def enumerate_agents(config) -> List[AgentActionSpace]:
    shape = SpaceShape.of(config)
    return [enumerate_agent(shape, i) for i in range(shape.num_workstations)]


def enumerate_centralized(config, cap: int = None) -> CentralizedActionSpace:
    """Materialize A in lexicographic order of the flattened matrices."""
    shape = SpaceShape.of(config)
    cap = action_cap() if cap is None else cap
    size = count_occupancy_constrained(shape)
    if size > cap:
        raise ActionSpaceTooLarge(
            f"centralized action space has {size} actions (cap {cap}); "
            f"use the multi-agent mode for this instance"
        )

    per_row = [agent_rows(shape.num_tasks, c) for c in shape.occupancy_caps]
    matrices = np.zeros((size, shape.num_workstations, shape.num_tasks), dtype=np.int8)
    prefix = np.zeros((shape.num_workstations, shape.num_tasks), dtype=np.int8)
    count = 0

    # Rows are chosen in lexicographic order, so the concatenation is too.
    def fill(i: int, used: np.ndarray):
        nonlocal count
        if i == shape.num_workstations:
            matrices[count] = prefix
            count += 1
            return
        for row in per_row[i]:
            if (row & used).any():
                continue
            prefix[i] = row
            fill(i + 1, used | row)
        prefix[i] = 0

    fill(0, np.zeros(shape.num_tasks, dtype=np.int8))
    assert count == size, f"enumerated {count} actions, expected {size}"
    logger.debug(f"Enumerated centralized action space: {size} actions")
    return CentralizedActionSpace(num_workstations=shape.num_workstations,
                                  num_tasks=shape.num_tasks, matrices=matrices)


def concat_rows(rows: Sequence[np.ndarray]) -> TaskAssignment:
    """Stack one row per workstation into a joint assignment (no feasibility check)."""
    arrays = [np.asarray(r) for r in rows]
    if not arrays:
        raise ValueError("concat_rows needs at least one row")
    width = arrays[0].shape
    for i, r in enumerate(arrays):
        if r.ndim != 1 or r.shape != width:
            raise ValueError(f"row {i + 1} has shape {r.shape}, expected {width}")
    return np.stack(arrays).astype(np.int64)
