"""Breadth-first shortest-completion search over the reachable state graph.

Kept deliberately plain (no bounds, no ordering) so it can cross-check the
branch-and-bound solver.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from src.actions.action_space import CentralizedActionSpace, enumerate_centralized
from src.actions.mask import centralized_mask
from src.factory.config import FactoryConfig
from src.factory.dynamics import transition
from src.factory.state import FactoryState, reset

logger = logging.getLogger(__name__)


def bfs_optimum(config: FactoryConfig, start: Optional[FactoryState] = None,
                space: Optional[CentralizedActionSpace] = None) -> Tuple[Optional[int], int]:
    """Return (earliest clock with every task finished or None, states expanded)."""
    space = space or enumerate_centralized(config)
    start = start if start is not None else reset(config)
    frontier: Dict[bytes, FactoryState] = {start.key(): start}
    expanded = 0

    while frontier:
        for state in frontier.values():
            if state.all_finished:
                return state.clock, expanded
        layer: Dict[bytes, FactoryState] = {}
        for state in frontier.values():
            if state.done:
                continue
            expanded += 1
            mask = centralized_mask(state, space, config)
            for z in np.flatnonzero(mask):
                nxt, _, _ = transition(state, space.decode(z), config)
                layer.setdefault(nxt.key(), nxt)
        frontier = layer
    return None, expanded
