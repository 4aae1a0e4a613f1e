from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from domain import Scene, Supervision
from gradkit import backward
from spotcost import CostWeights, MatchMode
from spotloss import LossBreakdown, LossWeights, loss_gradients
from toygym.model import ToyModel, forward_pass
from utils.errors import ArgumentError, ValidationError


class TrainMode(str, Enum):
    """
    FULL and WEAK train with the matching and loss of the same name.
    DET_CLS matches on classification + box only but still trains all heads;
    DET_ONLY additionally drops the recognition loss.
    """

    FULL = "full"
    WEAK = "weak"
    DET_CLS = "detcls"
    DET_ONLY = "detonly"

    @property
    def match_mode(self) -> MatchMode:
        return {
            TrainMode.FULL: MatchMode.FULL,
            TrainMode.WEAK: MatchMode.WEAK,
            TrainMode.DET_CLS: MatchMode.DET_CLS,
            TrainMode.DET_ONLY: MatchMode.DET_CLS,
        }[self]

    @property
    def loss_mode(self) -> MatchMode:
        return {
            TrainMode.FULL: MatchMode.FULL,
            TrainMode.WEAK: MatchMode.WEAK,
            TrainMode.DET_CLS: MatchMode.FULL,
            TrainMode.DET_ONLY: MatchMode.DET_CLS,
        }[self]

    @property
    def needs_boxes(self) -> bool:
        return self.match_mode.uses_box or self.loss_mode.uses_box


class Optimizer(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(0.003, ge=0.0)
    epochs: int = Field(40, ge=1)
    optimizer: Optimizer = Optimizer.ADAM
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(1e-8, gt=0.0)
    seed: int = 0
    mode: TrainMode = TrainMode.FULL
    cost: CostWeights = CostWeights()
    loss: LossWeights = LossWeights()
    # Global-norm gradient clipping per step; None disables it
    clip_norm: Optional[float] = Field(5.0, gt=0.0)

    @model_validator(mode="after")
    def check_betas(self) -> "TrainConfig":
        if not all(0.0 <= beta < 1.0 for beta in self.adam_betas):
            raise ValueError(f"adam_betas must lie in [0, 1), got {self.adam_betas}")
        return self


@dataclass(eq=False)
class TrainResult:
    model: ToyModel
    history: List[float]


def scene_loss_and_gradients(
    model: ToyModel, scene: Scene, tc: TrainConfig
) -> Tuple[LossBreakdown, Dict[str, np.ndarray]]:
    """
    Loss of one scene and its gradient for every model parameter.

    The loss gradients with respect to the predictions are computed at the
    current matching and pushed back through the model's tape.
    """
    fp = forward_pass(model, scene.features)
    grads = loss_gradients(
        fp.predictions(), scene.ground_truth, tc.cost, tc.loss, tc.mode.match_mode, tc.mode.loss_mode
    )
    tape = fp.tape
    surrogate = tape.add(
        tape.weighted_sum(fp.class_logits, grads.class_logits), tape.weighted_sum(fp.boxes, grads.boxes)
    )
    for node in fp.seed_char_gradients(grads.char_logits):
        surrogate = tape.add(surrogate, node)
    by_leaf = backward(tape, surrogate)
    return grads.breakdown, {name: by_leaf[leaf] for name, leaf in fp.leaves.items()}


def _clip(grads: Dict[str, np.ndarray], clip_norm: Optional[float]) -> Dict[str, np.ndarray]:
    if clip_norm is None:
        return grads
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm <= clip_norm:
        return grads
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}


class _Adam:
    """First and second moment estimates per parameter, bias-corrected at every step."""

    def __init__(self, model: ToyModel, betas: Tuple[float, float], eps: float):
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step = 0
        self.m = {name: np.zeros_like(value) for name, value in model.params.items()}
        self.v = {name: np.zeros_like(value) for name, value in model.params.items()}

    def direction(self, grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        self.step += 1
        c1, c2 = 1.0 - self.beta1**self.step, 1.0 - self.beta2**self.step
        result = {}
        for name, g in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            result[name] = (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + self.eps)
        return result


def check_supervision(scenes: Sequence[Scene], mode: TrainMode) -> None:
    if not mode.needs_boxes:
        return
    for scene in scenes:
        if scene.supervision == Supervision.WEAK:
            raise ValidationError(f"Train mode '{mode.value}' needs boxes, scene {scene.scene_id} is weakly supervised")


def train(model: ToyModel, scenes: Sequence[Scene], tc: TrainConfig) -> TrainResult:
    """
    Gradient descent on the Text Hungarian Loss, one scene per step, with
    either a constant step (sgd) or Adam moment scaling.

    Args:
        model: Starting point; it is copied, never modified
        scenes: Training scenes, visited in a seeded order every epoch
        tc: Mode, step size, epochs, seed and loss settings

    Returns:
        TrainResult: The trained model and the summed scene loss of every epoch

    Raises:
        ValidationError: A box-supervised mode meets a weakly supervised scene
    """
    if not scenes:
        raise ArgumentError("Training needs at least one scene")
    check_supervision(scenes, tc.mode)

    current = model.copy()
    rng = np.random.default_rng(tc.seed)
    adam = _Adam(current, tc.adam_betas, tc.adam_eps) if tc.optimizer == Optimizer.ADAM else None
    history: List[float] = []
    for epoch in range(1, tc.epochs + 1):
        losses = np.zeros(len(scenes))
        for index in rng.permutation(len(scenes)):
            breakdown, grads = scene_loss_and_gradients(current, scenes[index], tc)
            losses[index] = breakdown.total
            step = _clip(grads, tc.clip_norm)
            if adam is not None:
                step = adam.direction(step)
            current = current.with_params(
                {name: value - tc.learning_rate * step[name] for name, value in current.params.items()}
            )
        history.append(float(np.sum(losses)))
        logger.info(f"[{tc.mode.value}] epoch {epoch}/{tc.epochs}: loss {history[-1]:.4f}")
    return TrainResult(model=current, history=history)
