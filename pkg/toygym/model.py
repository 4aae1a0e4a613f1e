"""
The toy spotter: a per-cell encoder, N learned object queries mixing the
encoded cells into one joint embedding each, and three heads reading that
shared embedding (classification, detection, recognition).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from domain import Prediction, Scene
from geometry import Box
from gradkit import Tape
from toygym.world import WorldConfig
from utils.errors import ArgumentError


class RecognitionHead(str, Enum):
    RNN = "rnn"
    LINEAR = "linear"


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    feature_dim: int = Field(24, ge=1)
    num_cells: int = Field(16, ge=1)
    num_queries: int = Field(8, ge=1)
    d_emb: int = Field(32, ge=1)
    hidden: int = Field(32, ge=1)
    max_steps: int = Field(6, ge=1)
    alphabet_size: int = Field(10, ge=3)
    recognition_head: RecognitionHead = RecognitionHead.RNN

    @classmethod
    def for_world(cls, world: WorldConfig, **overrides) -> "ModelConfig":
        values = dict(
            feature_dim=world.feature_dim,
            num_cells=world.num_cells,
            num_queries=world.num_queries,
            max_steps=world.max_steps,
            alphabet_size=world.alphabet.size,
        )
        values.update(overrides)
        return cls(**values)


def parameter_shapes(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Every parameter's shape, in the canonical order used by checkpoints and gradient vectors."""
    e, h, n, steps, size = config.d_emb, config.hidden, config.num_queries, config.max_steps, config.alphabet_size
    shapes: Dict[str, Tuple[int, ...]] = {
        "encoder.w": (config.feature_dim, e),
        "encoder.b": (e,),
        "queries.routing": (n, config.num_cells),
        "queries.embed": (n, e),
        "cls.w": (e, 2),
        "cls.b": (2,),
        "det.w1": (e, e),
        "det.b1": (e,),
        "det.w2": (e, e),
        "det.b2": (e,),
        "det.w3": (e, 4),
        "det.b3": (4,),
    }
    if config.recognition_head == RecognitionHead.RNN:
        shapes.update(
            {
                "rec.w_init": (e, h),
                "rec.b_init": (h,),
                "rec.w_in": (e, h),
                "rec.w_hh": (h, h),
                "rec.b_h": (h,),
                "rec.w_out": (h, size),
                "rec.b_out": (size,),
            }
        )
    else:
        shapes.update({"rec.w_lin": (e, steps * size), "rec.b_lin": (steps * size,)})
    return shapes


DETECTION_PREFIX = "det."


@dataclass(eq=False)
class ToyModel:
    config: ModelConfig
    params: Dict[str, np.ndarray]

    def __post_init__(self):
        expected = parameter_shapes(self.config)
        if set(self.params) != set(expected):
            raise ArgumentError(f"Model parameters {sorted(self.params)} do not match {sorted(expected)}")
        ordered = {}
        for name, shape in expected.items():
            value = np.asarray(self.params[name], dtype=np.float64)
            if value.shape != shape:
                raise ArgumentError(f"Parameter {name} has shape {value.shape}, expected {shape}")
            if not np.all(np.isfinite(value)):
                raise ArgumentError(f"Parameter {name} holds non-finite values")
            ordered[name] = value
        self.params = ordered

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "ToyModel":
        """Glorot-uniform matrices, zero biases, and query routing seeded one cell group per query."""
        rng = np.random.default_rng(seed)
        params: Dict[str, np.ndarray] = {}
        for name, shape in parameter_shapes(config).items():
            if len(shape) == 1:
                params[name] = np.zeros(shape)
            elif name == "queries.routing":
                routing = 0.01 * rng.standard_normal(shape)
                for cell in range(config.num_cells):
                    query, group = cell % config.num_queries, cell // config.num_queries
                    routing[query, cell] += 1.0 if group % 2 == 0 else -1.0
                params[name] = routing
            elif name == "queries.embed":
                params[name] = 0.1 * rng.standard_normal(shape)
            else:
                limit = np.sqrt(6.0 / (shape[0] + shape[1]))
                params[name] = rng.uniform(-limit, limit, size=shape)
        return cls(config, params)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ToyModel":
        return cls(config, {name: np.zeros(shape) for name, shape in parameter_shapes(config).items()})

    @property
    def parameter_names(self) -> List[str]:
        return list(self.params)

    def copy(self) -> "ToyModel":
        return ToyModel(self.config, {name: value.copy() for name, value in self.params.items()})

    def with_params(self, params: Dict[str, np.ndarray]) -> "ToyModel":
        return ToyModel(self.config, dict(params))

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.params[name].ravel() for name in self.params])

    def with_flat(self, vector: np.ndarray) -> "ToyModel":
        """A model holding ``vector`` laid out as ``flatten`` lays it out."""
        total = sum(value.size for value in self.params.values())
        if np.size(vector) != total:
            raise ArgumentError(f"Flat vector has {np.size(vector)} entries, model has {total}")
        vector = np.ravel(vector)
        params, offset = {}, 0
        for name, value in self.params.items():
            params[name] = np.asarray(vector[offset : offset + value.size], dtype=np.float64).reshape(value.shape)
            offset += value.size
        return ToyModel(self.config, params)


@dataclass(eq=False)
class ForwardPass:
    """A forward computation recorded on a tape, with the ids of its output nodes."""

    tape: Tape
    leaves: Dict[str, int]
    class_logits: int
    boxes: int
    char_logits: Tuple[int, ...]
    config: ModelConfig

    def char_logit_values(self) -> np.ndarray:
        """N x max_steps x l logits, whichever head produced them."""
        n, steps, size = self.config.num_queries, self.config.max_steps, self.config.alphabet_size
        if self.config.recognition_head == RecognitionHead.LINEAR:
            return self.tape.value(self.char_logits[0]).reshape(n, steps, size)
        return np.stack([self.tape.value(node) for node in self.char_logits], axis=1)

    def seed_char_gradients(self, grad: np.ndarray) -> List[int]:
        """weighted_sum nodes injecting d loss / d char logits (N x steps x l) into the tape."""
        if self.config.recognition_head == RecognitionHead.LINEAR:
            return [self.tape.weighted_sum(self.char_logits[0], grad.reshape(grad.shape[0], -1))]
        return [self.tape.weighted_sum(node, grad[:, t, :]) for t, node in enumerate(self.char_logits)]

    def predictions(self) -> List[Prediction]:
        class_logits = self.tape.value(self.class_logits)
        boxes = self.tape.value(self.boxes)
        chars = self.char_logit_values()
        return [
            Prediction(class_logits[q], Box.center_size(*boxes[q]), chars[q]) for q in range(self.config.num_queries)
        ]


def _dense(tape: Tape, x: int, w: int, b: int) -> int:
    return tape.add(tape.matmul(x, w), b)


def forward_pass(model: ToyModel, features: np.ndarray, tape: Optional[Tape] = None) -> ForwardPass:
    config = model.config
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (config.num_cells, config.feature_dim):
        raise ArgumentError(
            f"Scene features have shape {features.shape}, the encoder expects {(config.num_cells, config.feature_dim)}"
        )
    if tape is None:
        tape = Tape()
    p = {name: tape.leaf(value, name) for name, value in model.params.items()}

    encoded = tape.tanh(_dense(tape, tape.constant(features, "features"), p["encoder.w"], p["encoder.b"]))
    q_emb = tape.tanh(tape.add(tape.matmul(p["queries.routing"], encoded), p["queries.embed"]))

    class_logits = _dense(tape, q_emb, p["cls.w"], p["cls.b"])

    z = tape.tanh(_dense(tape, q_emb, p["det.w1"], p["det.b1"]))
    z = tape.tanh(_dense(tape, z, p["det.w2"], p["det.b2"]))
    boxes = tape.sigmoid(_dense(tape, z, p["det.w3"], p["det.b3"]))

    if config.recognition_head == RecognitionHead.RNN:
        state = tape.tanh(_dense(tape, q_emb, p["rec.w_init"], p["rec.b_init"]))
        drive = tape.matmul(q_emb, p["rec.w_in"])
        steps = []
        for _ in range(config.max_steps):
            state = tape.tanh(tape.add(tape.add(tape.matmul(state, p["rec.w_hh"]), drive), p["rec.b_h"]))
            steps.append(_dense(tape, state, p["rec.w_out"], p["rec.b_out"]))
        char_logits = tuple(steps)
    else:
        char_logits = (_dense(tape, q_emb, p["rec.w_lin"], p["rec.b_lin"]),)

    return ForwardPass(tape, p, class_logits, boxes, char_logits, config)


def model_forward(model: ToyModel, scene: Scene) -> List[Prediction]:
    """
    Exactly N predictions for one scene. Pure: the model is not touched.

    Raises:
        ArgumentError: The features do not match the encoder's input shape
    """
    return forward_pass(model, scene.features).predictions()
