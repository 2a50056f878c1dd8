from .branch_and_bound import (
    BranchAndBoundSolver,
    SearchBudgetExceeded,
    SolveResult,
    lower_bound,
    replay,
    solve,
)
from .bfs import bfs_optimum
