"""
Matching criteria between ground-truth words and predictions.

Full mode adds classification, box and recognition terms; Weak mode drops
the box term; DetClsOnly drops the recognition term (the DETR criteria).
"""

from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from assignment import CostMatrix, MatchResult, solve_assignment
from domain import GroundTruthInstance, ObjectClass, Prediction, Transcription, word_targets
from geometry import Box, BoxFormat, center_size_to_corners, pairwise_giou
from utils.errors import ArgumentError, CapacityError, ValidationError


class MatchMode(str, Enum):
    FULL = "full"
    WEAK = "weak"
    DET_CLS = "detcls"

    @property
    def uses_box(self) -> bool:
        return self in (MatchMode.FULL, MatchMode.DET_CLS)

    @property
    def uses_recognition(self) -> bool:
        return self in (MatchMode.FULL, MatchMode.WEAK)


class CostWeights(BaseModel):
    """alpha weights of the matching criteria; the box weight is split into L1 and GIoU parts."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha_c: float = Field(2.0, ge=0.0)
    alpha_box_l1: float = Field(5.0, ge=0.0)
    alpha_box_giou: float = Field(2.0, ge=0.0)
    alpha_rec: float = Field(1.0, ge=0.0)
    # Divide the recognition cost by the number of scored steps (word length + EOS)
    normalize_length: bool = False

    @model_validator(mode="after")
    def check_not_all_zero(self) -> "CostWeights":
        if self.alpha_c == 0 and self.alpha_box_l1 == 0 and self.alpha_box_giou == 0 and self.alpha_rec == 0:
            raise ValueError("at least one cost weight must be positive")
        return self


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable log-softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def classification_cost(pred: Prediction, cls: ObjectClass, alpha_c: float = 1.0) -> float:
    """-alpha_c * p(cls); lies in [-alpha_c, 0]."""
    return -alpha_c * float(softmax(pred.class_logits)[cls.index])


def box_cost(pred_box: Box, gt_box: Box, w: CostWeights) -> float:
    """L1 distance in center-size space plus (1 - GIoU) on corners, each with its own weight."""
    if pred_box.fmt != BoxFormat.CENTER_SIZE or gt_box.fmt != BoxFormat.CENTER_SIZE:
        raise ArgumentError("box_cost expects center-size boxes")
    pred, gt = pred_box.as_array(), gt_box.as_array()
    l1 = float(np.sum(np.abs(pred - gt)))
    g = float(pairwise_giou(center_size_to_corners(gt[None]), center_size_to_corners(pred[None]))[0, 0])
    return w.alpha_box_l1 * l1 + w.alpha_box_giou * (1.0 - g)


def recognition_cost(
    char_logits: np.ndarray, gt: Transcription, alpha_rec: float = 1.0, normalize_length: bool = False
) -> float:
    """
    alpha_rec * sum_j -log p(t_j) over the word's characters and the terminating EOS.

    EOS is taken to be the first reserved index (``l - 2``), as laid out by ``Alphabet``.
    """
    char_logits = np.asarray(char_logits, dtype=np.float64)
    steps, size = char_logits.shape
    if len(gt) + 1 > steps:
        raise ArgumentError(f"Word of length {len(gt)} plus EOS does not fit in {steps} steps")
    targets = word_targets(gt, size)
    logp = log_softmax(char_logits[: len(targets)])
    cost = -float(np.sum(logp[np.arange(len(targets)), targets]))
    if normalize_length:
        cost /= len(targets)
    return alpha_rec * cost


def build_cost_matrix(
    preds: Sequence[Prediction],
    gts: Sequence[GroundTruthInstance],
    w: CostWeights,
    mode: MatchMode,
) -> CostMatrix:
    """
    Cost of matching every ground-truth word (rows) to every prediction (columns).

    Args:
        preds: The N predictions of one scene
        gts: Text instances of the scene; M <= N
        w: Criteria weights
        mode: Which terms enter the criteria

    Returns:
        CostMatrix: Summed costs plus the three component matrices

    Raises:
        CapacityError: More words than predictions
        ValidationError: A non-text instance, or a box-based mode without ground-truth boxes
    """
    num_gt, num_pred = len(gts), len(preds)
    if num_gt > num_pred:
        raise CapacityError(
            f"{num_gt} ground-truth words but only {num_pred} predictions; raise the query count N"
        )
    for inst in gts:
        if inst.cls != ObjectClass.TEXT or inst.transcription is None:
            raise ValidationError("Only text instances with transcriptions take part in matching")
        if mode.uses_box and inst.box is None:
            raise ValidationError(f"Matching mode '{mode.value}' needs ground-truth boxes")

    zeros = np.zeros((num_gt, num_pred))
    if num_gt == 0:
        return CostMatrix(zeros, zeros, zeros, zeros)

    class_probs = softmax(np.stack([p.class_logits for p in preds]))
    cls_costs = np.repeat(-w.alpha_c * class_probs[None, :, ObjectClass.TEXT.index], num_gt, axis=0)

    box_costs = zeros.copy()
    if mode.uses_box:
        pred_boxes = np.stack([p.box.as_array() for p in preds])
        gt_boxes = np.stack([inst.box.as_array() for inst in gts])  # type: ignore[union-attr]
        l1 = np.sum(np.abs(gt_boxes[:, None, :] - pred_boxes[None, :, :]), axis=-1)
        g = pairwise_giou(center_size_to_corners(gt_boxes), center_size_to_corners(pred_boxes))
        box_costs = w.alpha_box_l1 * l1 + w.alpha_box_giou * (1.0 - g)

    rec_costs = zeros.copy()
    if mode.uses_recognition:
        char_logits = np.stack([p.char_logits for p in preds])
        steps, size = char_logits.shape[1:]
        logp = log_softmax(char_logits)
        for row, inst in enumerate(gts):
            targets = word_targets(inst.transcription, size)  # type: ignore[arg-type]
            if len(targets) > steps:
                raise ArgumentError(f"Word of length {len(targets) - 1} plus EOS does not fit in {steps} steps")
            nll = -np.sum(logp[:, np.arange(len(targets)), targets], axis=1)
            if w.normalize_length:
                nll = nll / len(targets)
            rec_costs[row] = w.alpha_rec * nll

    values = cls_costs + box_costs + rec_costs
    return CostMatrix(values, cls_costs, box_costs, rec_costs)


def match_predictions(
    preds: Sequence[Prediction], gts: Sequence[GroundTruthInstance], w: CostWeights, mode: MatchMode
) -> Tuple[CostMatrix, MatchResult]:
    """Build the criteria for the scene's text instances and solve for the optimal assignment."""
    words = [inst for inst in gts if inst.cls == ObjectClass.TEXT]
    costs = build_cost_matrix(preds, words, w, mode)
    return costs, solve_assignment(costs)
