"""Assignment feasibility: the seven factory constraints plus unique assignment.

All checks are vectorized over a batch of candidate actions of shape (N, I, J);
a single action is a batch of one.
"""

from enum import IntEnum
from typing import Optional

import numpy as np

from .config import FactoryConfig
from .state import FactoryState, TaskAssignment

FEASIBLE = -1


class Constraint(IntEnum):
    UNIQUE_ASSIGNMENT = 0   # a task goes to at most one workstation
    FINISHED = 1            # do not assign finished tasks
    EXECUTING = 2           # task already in an execution state
    DEADLINE = 3            # k + D(i, j) <= F(j)
    OCCUPANCY = 4           # o(i) + sum_j a(i, j) <= O(i)
    PRECEDENCE = 5          # predecessors must be finished
    BUFFER = 6              # b(i, r) + incoming(i, r) <= U(i, r)
    INVENTORY = 7           # factory-wide demand <= g(r)

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


_DESCRIPTIONS = {
    Constraint.UNIQUE_ASSIGNMENT: "task assigned to more than one workstation",
    Constraint.FINISHED: "task already finished",
    Constraint.EXECUTING: "task already executing",
    Constraint.DEADLINE: "assignment would violate the task deadline",
    Constraint.OCCUPANCY: "workstation occupancy cap exceeded",
    Constraint.PRECEDENCE: "a preceding task is not finished",
    Constraint.BUFFER: "workstation buffer capacity exceeded",
    Constraint.INVENTORY: "insufficient factory inventory",
}


class FeasibilityViolation(ValueError):
    """Raised when an action breaks a constraint; names the first one violated."""

    def __init__(self, constraint: Constraint, action: Optional[np.ndarray] = None):
        self.constraint = constraint
        self.action = action
        super().__init__(
            f"Infeasible action: constraint {int(constraint)} "
            f"({constraint.name.lower()}): {constraint.description}"
        )


def blocked_by_precedence(state: FactoryState, config: FactoryConfig) -> np.ndarray:
    """(J,) bool: task j1 has some j2 with P(j1, j2) = -1 and j2 unfinished."""
    unfinished = state.finished == 0
    return ((config.precedence == -1) & unfinished[None, :]).any(axis=1)


def batch_violations(state: FactoryState, actions: np.ndarray,
                     config: FactoryConfig) -> np.ndarray:
    """First violated constraint per action, FEASIBLE (-1) where none.

    `actions` has shape (N, I, J). Checks run in Constraint order, so the
    returned code is the lowest-numbered violated constraint.
    """
    actions = np.asarray(actions)
    n_i, n_j = config.num_workstations, config.num_tasks
    if actions.ndim != 3 or actions.shape[1:] != (n_i, n_j):
        raise ValueError(f"actions must have shape (N, {n_i}, {n_j}), got {actions.shape}")

    a = actions.astype(np.int64, copy=False)
    per_task = a.sum(axis=1)                        # (N, J)
    assigned = per_task > 0
    incoming = np.einsum("nij,jr->nir", a, config.resource_needs)   # (N, I, R)

    late = (state.clock + config.durations) > config.deadlines[None, :]
    checks = (
        (Constraint.UNIQUE_ASSIGNMENT, (per_task > 1).any(axis=1)),
        (Constraint.FINISHED, (assigned & (state.finished == 1)[None, :]).any(axis=1)),
        (Constraint.EXECUTING, (assigned & (state.executing.sum(axis=0) > 0)[None, :]).any(axis=1)),
        (Constraint.DEADLINE, ((a > 0) & late[None, :, :]).any(axis=(1, 2))),
        (Constraint.OCCUPANCY, (state.occupancies[None, :] + a.sum(axis=2)
                                > config.occupancy_caps[None, :]).any(axis=1)),
        (Constraint.PRECEDENCE, (assigned & blocked_by_precedence(state, config)[None, :]).any(axis=1)),
        (Constraint.BUFFER, (state.buffers[None, :, :] + incoming
                             > config.buffer_caps[None, :, :]).any(axis=(1, 2))),
        (Constraint.INVENTORY, (incoming.sum(axis=1) > state.inventories[None, :]).any(axis=1)),
    )

    codes = np.full(a.shape[0], FEASIBLE, dtype=np.int64)
    for constraint, violated in reversed(checks):
        codes[violated] = int(constraint)
    return codes


def check_action(state: FactoryState, action: TaskAssignment,
                 config: FactoryConfig) -> Optional[Constraint]:
    """Return the first violated constraint, or None when the action is feasible."""
    action = np.asarray(action)
    if action.shape != (config.num_workstations, config.num_tasks):
        raise ValueError(
            f"action must have shape ({config.num_workstations}, {config.num_tasks}), "
            f"got {action.shape}"
        )
    code = int(batch_violations(state, action[None, :, :], config)[0])
    return None if code == FEASIBLE else Constraint(code)


def action_feasible(state: FactoryState, action: TaskAssignment, config: FactoryConfig) -> bool:
    return check_action(state, action, config) is None
