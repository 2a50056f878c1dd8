from .data_service import DataService
from .training_service import (
    CentralizedTrainer,
    EpisodeRecord,
    TrainingLog,
    convergence_episode,
)
from .marl_service import MultiAgentTrainer, marl_train
from .evaluation_service import (
    RobustnessReport,
    load_trainer,
    robustness_test,
    sample_reachable_state,
)
from .report_service import (
    action_space_table,
    convergence_comparison,
    growth_report,
    mask_check,
)
from .experiment_service import RunManifest, compare_runs, run_training
