from .network import AdamOptimizer, DenseNetwork, masked_softmax
from .buffers import EpsilonSchedule, ReplayBuffer, RolloutBuffer
from .dqn import DQNAgent, DQNConfig, dqn_learn_step, dqn_select_action
from .ppo import (
    PPOAgent,
    PPOConfig,
    PPOStats,
    compute_gae,
    compute_probs_new_action,
    ppo_policy,
)
from .coordination import (
    AgentPool,
    FictitiousEnvironment,
    coordinate,
    sequential_feasibility_check,
)
from .checkpoint import load_checkpoint, save_checkpoint
