"""Factory problem instances: loading, validation and serialization."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 10.0


class InstanceValidationError(ValueError):
    """Raised when a factory instance violates its structural invariants."""

    def __init__(self, problems: List[str], source: str = "instance"):
        self.problems = list(problems)
        self.source = source
        lines = "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(f"Invalid {source} ({len(self.problems)} problem(s)):\n{lines}")


@dataclass(frozen=True)
class RewardConfig:
    """Terminal reward beta * h / (1 + k^alpha)."""
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        problems = []
        if not self.alpha > 0:
            problems.append(f"reward alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            problems.append(f"reward beta must be > 0, got {self.beta}")
        if problems:
            raise InstanceValidationError(problems, source="reward config")

    def reward(self, done_all_finished: bool, clock: int) -> float:
        if not done_all_finished:
            return 0.0
        return self.beta / (1.0 + float(clock) ** self.alpha)


def _whole_numbers(value: Any, name: str, problems: List[str]) -> np.ndarray:
    """Integer copy of value; every entry that is not a whole number is reported."""
    try:
        raw = np.asarray(value)
    except (TypeError, ValueError) as e:
        problems.append(f"{name}: not an integer array ({e})")
        return np.zeros(0, dtype=np.int64)
    if raw.size == 0:
        return np.zeros(raw.shape, dtype=np.int64)
    if raw.dtype.kind not in "iuf":
        problems.append(f"{name}: entries must be whole numbers, got {raw.dtype} values")
        return np.zeros(raw.shape, dtype=np.int64)
    if raw.dtype.kind == "f":
        bad = ~np.isfinite(raw) | (raw != np.round(raw))
        for idx, flagged in np.ndenumerate(bad):
            if flagged:
                pos = "".join(f"[{k + 1}]" for k in idx)
                problems.append(f"{name}{pos} must be a whole number, got {raw[idx]}")
        raw = np.where(bad, 0, raw)
    return raw.astype(np.int64)


def _whole_number(value: Any) -> Optional[int]:
    if isinstance(value, (bool, np.bool_)):
        return None
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return int(value)
    return None


def precedence_cycle(precedence: np.ndarray) -> Optional[List[int]]:
    """Return one cycle of the graph {j1 -> j2 : P(j1, j2) = 1}, or None if acyclic."""
    n = precedence.shape[0]
    color = [0] * n  # 0 new, 1 on stack, 2 done
    parent = [-1] * n

    for root in range(n):
        if color[root]:
            continue
        stack = [(root, 0)]
        color[root] = 1
        while stack:
            node, nxt = stack[-1]
            successors = np.flatnonzero(precedence[node] == 1)
            if nxt < len(successors):
                stack[-1] = (node, nxt + 1)
                child = int(successors[nxt])
                if color[child] == 1:
                    cycle = [child]
                    cur = node
                    while cur != child:
                        cycle.append(cur)
                        cur = parent[cur]
                    return list(reversed(cycle))
                if color[child] == 0:
                    color[child] = 1
                    parent[child] = node
                    stack.append((child, 0))
            else:
                color[node] = 2
                stack.pop()
    return None


@dataclass(frozen=True, eq=False)
class FactoryConfig:
    """Immutable factory instance (symbols O, U, D, F, P, C, G of the model).

    Matrices are numpy arrays with 0-based indices; they are made read-only on
    construction so that one config can be shared by environments, masks and
    solvers without copying.
    """
    horizon: int
    occupancy_caps: np.ndarray      # (I,)
    buffer_caps: np.ndarray         # (I, R)
    durations: np.ndarray           # (I, J)
    deadlines: np.ndarray           # (J,)
    precedence: np.ndarray          # (J, J)
    resource_needs: np.ndarray      # (J, R)
    inventories: np.ndarray         # (R,)
    returnable_resources: bool = False
    reward: RewardConfig = field(default_factory=RewardConfig)
    name: str = "instance"

    def __post_init__(self):
        coercion: List[str] = []
        for attr in ("occupancy_caps", "buffer_caps", "durations", "deadlines",
                     "precedence", "resource_needs", "inventories"):
            arr = _whole_numbers(getattr(self, attr), attr, coercion)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        horizon = _whole_number(self.horizon)
        if horizon is None:
            coercion.append(f"horizon must be a whole number, got {self.horizon!r}")
        else:
            object.__setattr__(self, "horizon", horizon)
        if isinstance(self.returnable_resources, np.bool_):
            object.__setattr__(self, "returnable_resources", bool(self.returnable_resources))
        elif not isinstance(self.returnable_resources, bool):
            coercion.append(
                f"returnable_resources must be true or false, got {self.returnable_resources!r}"
            )
        object.__setattr__(self, "_coercion_problems", coercion)
        problems = self.validate()
        if problems:
            raise InstanceValidationError(problems, source=f"instance '{self.name}'")

    @property
    def num_workstations(self) -> int:
        return int(self.occupancy_caps.shape[0])

    @property
    def num_tasks(self) -> int:
        return int(self.deadlines.shape[0])

    @property
    def num_resources(self) -> int:
        return int(self.inventories.shape[0])

    @property
    def state_size(self) -> int:
        """delta_s = |I| * (1 + |J| * (1 + |R|))."""
        return self.num_workstations * (1 + self.num_tasks * (1 + self.num_resources))

    def validate(self) -> List[str]:
        """Check every instance invariant and return a list of problems."""
        problems: List[str] = list(getattr(self, "_coercion_problems", []))
        n_i = self.occupancy_caps.shape[0] if self.occupancy_caps.ndim == 1 else -1
        n_j = self.deadlines.shape[0] if self.deadlines.ndim == 1 else -1
        n_r = self.inventories.shape[0] if self.inventories.ndim == 1 else -1

        if isinstance(self.horizon, int) and self.horizon <= 0:
            problems.append(f"horizon must be positive, got {self.horizon}")
        if n_i <= 0:
            problems.append("occupancy_caps must be a non-empty vector (one entry per workstation)")
        if n_j <= 0:
            problems.append("deadlines must be a non-empty vector (one entry per task)")
        if n_r < 0:
            problems.append("inventories must be a vector (one entry per resource)")

        expected = {
            "buffer_caps": (n_i, n_r),
            "durations": (n_i, n_j),
            "precedence": (n_j, n_j),
            "resource_needs": (n_j, n_r),
        }
        shapes_ok = n_i > 0 and n_j > 0 and n_r >= 0
        for attr, shape in expected.items():
            actual = getattr(self, attr).shape
            if actual != shape:
                problems.append(f"{attr}: expected shape {shape}, got {actual}")
                shapes_ok = False
        if not shapes_ok or getattr(self, "_coercion_problems", None):
            return problems

        for i, cap in enumerate(self.occupancy_caps):
            if cap <= 0:
                problems.append(f"occupancy_caps[{i + 1}] must be positive, got {cap}")
        for (i, j), d in np.ndenumerate(self.durations):
            if d <= 0:
                problems.append(f"durations[{i + 1}][{j + 1}] must be positive, got {d}")
        for j, f in enumerate(self.deadlines):
            if f <= 0:
                problems.append(f"deadlines[{j + 1}] must be positive, got {f}")
        for attr in ("buffer_caps", "resource_needs", "inventories"):
            arr = getattr(self, attr)
            for idx in zip(*np.nonzero(arr < 0)):
                pos = "][".join(str(k + 1) for k in idx)
                problems.append(f"{attr}[{pos}] must be nonnegative, got {arr[idx]}")

        p = self.precedence
        if not np.isin(p, (-1, 0, 1)).all():
            problems.append("precedence entries must be in {-1, 0, 1}")
        for j in range(n_j):
            if p[j, j] != 0:
                problems.append(f"precedence[{j + 1}][{j + 1}] must be 0 (diagonal)")
        for j1 in range(n_j):
            for j2 in range(j1 + 1, n_j):
                if p[j1, j2] != -p[j2, j1]:
                    problems.append(
                        f"precedence not antisymmetric at ({j1 + 1},{j2 + 1}): "
                        f"{p[j1, j2]} vs {p[j2, j1]}"
                    )
        if not problems:
            cycle = precedence_cycle(p)
            if cycle is not None:
                path = " -> ".join(str(j + 1) for j in cycle + [cycle[0]])
                problems.append(f"precedence graph is cyclic: {path}")
        return problems

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: Optional[str] = None) -> "FactoryConfig":
        """Build a config from the JSON document layout (FactoryConfig field names)."""
        problems: List[str] = []
        source = f"instance '{name or data.get('name', '?')}'"
        required = ("horizon", "occupancy_caps", "buffer_caps", "durations",
                    "deadlines", "precedence", "resource_needs", "inventories")
        missing = [k for k in required if k not in data]
        if missing:
            raise InstanceValidationError([f"missing field '{k}'" for k in missing], source=source)

        reward_data = data.get("reward", {})
        config = cls(
            horizon=data["horizon"],
            returnable_resources=data.get("returnable_resources", False),
            reward=RewardConfig(
                alpha=float(reward_data.get("alpha", DEFAULT_ALPHA)),
                beta=float(reward_data.get("beta", DEFAULT_BETA)),
            ),
            name=name or data.get("name", "instance"),
            **{attr: data[attr] for attr in required if attr != "horizon"},
        )
        # Declared counts are optional but must agree with the matrices.
        counts = {
            "num_workstations": config.num_workstations,
            "num_tasks": config.num_tasks,
            "num_resources": config.num_resources,
        }
        for key, size in counts.items():
            if key in data and _whole_number(data[key]) != size:
                problems.append(f"{key}={data[key]} disagrees with matrix size {size}")
        if problems:
            raise InstanceValidationError(problems, source=source)
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "num_workstations": self.num_workstations,
            "num_tasks": self.num_tasks,
            "num_resources": self.num_resources,
            "horizon": self.horizon,
            "occupancy_caps": self.occupancy_caps.tolist(),
            "buffer_caps": self.buffer_caps.tolist(),
            "durations": self.durations.tolist(),
            "deadlines": self.deadlines.tolist(),
            "precedence": self.precedence.tolist(),
            "resource_needs": self.resource_needs.tolist(),
            "inventories": self.inventories.tolist(),
            "returnable_resources": self.returnable_resources,
            "reward": {"alpha": self.reward.alpha, "beta": self.reward.beta},
        }


def load_instance(path: Union[str, Path]) -> FactoryConfig:
    """Load and validate a factory instance from a JSON file."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise InstanceValidationError([f"invalid JSON: {e}"], source=str(path)) from e
    config = FactoryConfig.from_dict(data, name=data.get("name", path.stem))
    logger.debug(f"Loaded instance {config.name}: |I|={config.num_workstations} "
                 f"|J|={config.num_tasks} |R|={config.num_resources} horizon={config.horizon}")
    return config


def save_instance(config: FactoryConfig, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2)
