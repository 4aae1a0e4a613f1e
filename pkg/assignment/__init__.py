from .hungarian import (
    MAX_BRUTE_FORCE_COLUMNS,
    CostMatrix,
    MatchResult,
    PairCost,
    brute_force_assignment,
    solve_assignment,
)

__all__ = [
    "MAX_BRUTE_FORCE_COLUMNS",
    "CostMatrix",
    "MatchResult",
    "PairCost",
    "brute_force_assignment",
    "solve_assignment",
]
