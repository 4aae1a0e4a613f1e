"""
Text Hungarian Loss and its gradients at a fixed matching.

The matching is recomputed on every call and treated as a constant: the
gradients returned are those of the loss evaluated at the optimal assignment.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from assignment import MatchResult
from domain import GroundTruthInstance, ObjectClass, Prediction, word_targets
from geometry import giou_and_grad
from spotcost import CostWeights, MatchMode, log_softmax, match_predictions
from utils.errors import ValidationError


class LossWeights(BaseModel):
    """beta weights of the loss plus the down-weighting of unmatched (no-object) predictions."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta_c: float = Field(1.0, ge=0.0)
    beta_box_l1: float = Field(5.0, ge=0.0)
    beta_box_giou: float = Field(2.0, ge=0.0)
    beta_rec: float = Field(1.0, ge=0.0)
    noobj_coef: float = Field(0.1, gt=0.0, le=1.0)


@dataclass(frozen=True)
class LossBreakdown:
    """
    Unweighted components; ``total`` is their beta-weighted sum.

    ``classification`` already includes the no-object down-weighting.
    """

    total: float
    classification: float
    box_l1: float
    box_giou: float
    recognition: float
    matching: MatchResult


@dataclass(frozen=True, eq=False)
class LossGradients:
    """d total / d prediction parameters, stacked by prediction index."""

    class_logits: np.ndarray
    boxes: np.ndarray
    char_logits: np.ndarray
    breakdown: LossBreakdown


def _evaluate(
    preds: Sequence[Prediction],
    gts: Sequence[GroundTruthInstance],
    cw: CostWeights,
    lw: LossWeights,
    mode: MatchMode,
    loss_mode: Optional[MatchMode],
    with_grad: bool,
) -> Tuple[LossBreakdown, Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]]:
    loss_mode = loss_mode or mode
    words = [inst for inst in gts if inst.cls == ObjectClass.TEXT]
    if loss_mode.uses_box and any(inst.box is None for inst in words):
        raise ValidationError(f"Loss mode '{loss_mode.value}' needs ground-truth boxes")

    _, matching = match_predictions(preds, words, cw, mode)
    owner = matching.column_to_row()

    num_pred = len(preds)
    steps, size = preds[0].char_logits.shape if preds else (0, 0)
    grad_cls = np.zeros((num_pred, 2))
    grad_box = np.zeros((num_pred, 4))
    grad_chars = np.zeros((num_pred, steps, size))

    cls_total = 0.0
    l1_total = 0.0
    giou_total = 0.0
    rec_total = 0.0
    for j, pred in enumerate(preds):
        logp_cls = log_softmax(pred.class_logits)
        row = owner.get(j)
        if row is None:
            target, weight = ObjectClass.NO_OBJECT.index, lw.noobj_coef
        else:
            target, weight = ObjectClass.TEXT.index, 1.0
        cls_total += -weight * float(logp_cls[target])
        if with_grad:
            grad_cls[j] = lw.beta_c * weight * np.exp(logp_cls)
            grad_cls[j, target] -= lw.beta_c * weight
        if row is None:
            continue

        inst = words[row]
        if loss_mode.uses_box:
            pred_box, gt_box = pred.box.as_array(), inst.box.as_array()  # type: ignore[union-attr]
            delta = pred_box - gt_box
            l1_total += float(np.sum(np.abs(delta)))
            g, d_giou = giou_and_grad(pred_box, gt_box)
            giou_total += 1.0 - g
            if with_grad:
                grad_box[j] = lw.beta_box_l1 * np.sign(delta) - lw.beta_box_giou * d_giou

        if loss_mode.uses_recognition:
            targets = word_targets(inst.transcription, size)  # type: ignore[arg-type]
            scored = len(targets)
            if scored > steps:
                raise ValidationError(f"Word of length {scored - 1} plus EOS does not fit in {steps} steps")
            logp = log_softmax(pred.char_logits[:scored])
            rec_total += -float(np.sum(logp[np.arange(scored), targets]))
            if with_grad:
                grad_chars[j, :scored] = lw.beta_rec * np.exp(logp)
                grad_chars[j, np.arange(scored), targets] -= lw.beta_rec

    total = (
        lw.beta_c * cls_total
        + lw.beta_box_l1 * l1_total
        + lw.beta_box_giou * giou_total
        + lw.beta_rec * rec_total
    )
    breakdown = LossBreakdown(
        total=total,
        classification=cls_total,
        box_l1=l1_total,
        box_giou=giou_total,
        recognition=rec_total,
        matching=matching,
    )
    return breakdown, (grad_cls, grad_box, grad_chars) if with_grad else None


def hungarian_loss(
    preds: Sequence[Prediction],
    gts: Sequence[GroundTruthInstance],
    cw: CostWeights,
    lw: LossWeights,
    mode: MatchMode,
    loss_mode: Optional[MatchMode] = None,
) -> LossBreakdown:
    """
    Text Hungarian Loss of one scene.

    Args:
        preds: The N predictions
        gts: Ground truth; non-text instances are ignored
        cw: Matching criteria weights
        lw: Loss weights
        mode: Matching mode; also selects the loss terms unless ``loss_mode`` is given
        loss_mode: Terms of the loss (box for Full/DetCls, recognition for Full/Weak)

    Returns:
        LossBreakdown: Components, total and the matching they were computed at
    """
    breakdown, _ = _evaluate(preds, gts, cw, lw, mode, loss_mode, with_grad=False)
    return breakdown


def loss_gradients(
    preds: Sequence[Prediction],
    gts: Sequence[GroundTruthInstance],
    cw: CostWeights,
    lw: LossWeights,
    mode: MatchMode,
    loss_mode: Optional[MatchMode] = None,
) -> LossGradients:
    """Analytic gradients of ``hungarian_loss`` w.r.t. every prediction parameter, assignment held fixed."""
    breakdown, grads = _evaluate(preds, gts, cw, lw, mode, loss_mode, with_grad=True)
    assert grads is not None
    grad_cls, grad_box, grad_chars = grads
    return LossGradients(class_logits=grad_cls, boxes=grad_box, char_logits=grad_chars, breakdown=breakdown)
