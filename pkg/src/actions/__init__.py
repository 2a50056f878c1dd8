from .action_space import (
    ActionSpaceTooLarge,
    AgentActionSpace,
    CentralizedActionSpace,
    SpaceShape,
    concat_rows,
    count_agent_space,
    count_occupancy_constrained,
    count_unconstrained,
    count_unique_assignment,
    enumerate_agent,
    enumerate_agents,
    enumerate_centralized,
)
from .mask import (
    ActionMask,
    agent_mask,
    agent_masks,
    centralized_mask,
    completion_clocks,
    confirm_violation,
    misses_deadline,
    sweep_masks,
)
from .environment import AssemblyLineEnv
