from .lexicon import lexicon_correct, load_lexicon
from .protocol import (
    EvalProtocol,
    EvalReport,
    EvalTask,
    MatchedPair,
    SceneCounts,
    ScoredWord,
    evaluate,
    f_measure,
    ground_truth_words,
    normalize_text,
    prediction_words,
)

__all__ = [
    "EvalProtocol",
    "EvalReport",
    "EvalTask",
    "MatchedPair",
    "SceneCounts",
    "ScoredWord",
    "evaluate",
    "f_measure",
    "ground_truth_words",
    "lexicon_correct",
    "load_lexicon",
    "normalize_text",
    "prediction_words",
]
