from .config import (
    FactoryConfig,
    RewardConfig,
    InstanceValidationError,
    load_instance,
    save_instance,
)
from .state import (
    FactoryState,
    TaskAssignment,
    reset,
    flatten_state,
    null_action,
    resource_assignment,
)
from .constraints import (
    Constraint,
    FeasibilityViolation,
    action_feasible,
    check_action,
    batch_violations,
)
from .dynamics import transition, book_assignment
from .generator import generate_instance
