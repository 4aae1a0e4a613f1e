from .criteria import (
    CostWeights,
    MatchMode,
    box_cost,
    build_cost_matrix,
    classification_cost,
    log_softmax,
    match_predictions,
    recognition_cost,
    softmax,
)

__all__ = [
    "CostWeights",
    "MatchMode",
    "box_cost",
    "build_cost_matrix",
    "classification_cost",
    "log_softmax",
    "match_predictions",
    "recognition_cost",
    "softmax",
]
