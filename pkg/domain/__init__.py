from .alphabet import (
    DEFAULT_MAX_WORD_LEN,
    DEFAULT_SYMBOLS,
    Alphabet,
    Transcription,
    check_logit_width,
    eos_index,
    greedy_decode,
    word_targets,
)
from .io import (
    PredictionRecord,
    decode_prediction,
    parse_dataset,
    parse_predictions,
    parse_raw_predictions,
    serialize_predictions,
    write_dataset,
    write_raw_predictions,
)
from .types import GroundTruthInstance, ObjectClass, Prediction, Scene, Supervision

__all__ = [
    "DEFAULT_MAX_WORD_LEN",
    "DEFAULT_SYMBOLS",
    "Alphabet",
    "GroundTruthInstance",
    "ObjectClass",
    "Prediction",
    "PredictionRecord",
    "Scene",
    "Supervision",
    "Transcription",
    "check_logit_width",
    "decode_prediction",
    "eos_index",
    "greedy_decode",
    "parse_dataset",
    "parse_predictions",
    "parse_raw_predictions",
    "serialize_predictions",
    "word_targets",
    "write_dataset",
    "write_raw_predictions",
]
