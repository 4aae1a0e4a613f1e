from .checkpoint import load_model, save_model
from .experiments import (
    ArmResult,
    ArmTiming,
    ExperimentConfig,
    ExperimentName,
    ExperimentReport,
    load_report,
    predict_words,
    run_experiment,
    score_model,
    transcription_lexicon,
)
from .model import (
    DETECTION_PREFIX,
    ForwardPass,
    ModelConfig,
    RecognitionHead,
    ToyModel,
    forward_pass,
    model_forward,
    parameter_shapes,
)
from .trainer import Optimizer, TrainConfig, TrainMode, TrainResult, scene_loss_and_gradients, train
from .world import Domain, Split, WorldConfig, domain_shift, encode_word, generate_dataset, generate_scene

__all__ = [
    "ArmResult",
    "ArmTiming",
    "DETECTION_PREFIX",
    "Domain",
    "ExperimentConfig",
    "ExperimentName",
    "ExperimentReport",
    "ForwardPass",
    "ModelConfig",
    "Optimizer",
    "RecognitionHead",
    "Split",
    "ToyModel",
    "TrainConfig",
    "TrainMode",
    "TrainResult",
    "WorldConfig",
    "domain_shift",
    "encode_word",
    "forward_pass",
    "generate_dataset",
    "generate_scene",
    "load_model",
    "load_report",
    "model_forward",
    "parameter_shapes",
    "predict_words",
    "run_experiment",
    "save_model",
    "scene_loss_and_gradients",
    "score_model",
    "train",
    "transcription_lexicon",
]
