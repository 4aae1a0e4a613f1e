from typing import List, Optional, Tuple

import numpy as np
from fastapi import APIRouter, status
from loguru import logger
from pydantic import BaseModel, Field

from api.errors import as_http_error
from api.settings import api_settings
from domain import Alphabet, Prediction, Scene, check_logit_width
from domain.io import InstanceRecord, RawPredictionItem, SceneRecord, scene_from_record
from geometry import Box
from spotcost import CostWeights, MatchMode, match_predictions
from spotloss import LossWeights, hungarian_loss
from utils.errors import SpotError, ValidationError

######################################################
## Routes for matching and loss inspection
######################################################

matching_router = APIRouter(tags=["Matching"])


class MatchRequest(BaseModel):
    """One scene: raw predictions and its ground truth"""

    predictions: List[RawPredictionItem]
    ground_truth: List[InstanceRecord] = Field(default_factory=list)
    mode: MatchMode = MatchMode.FULL
    cost: CostWeights = CostWeights()
    alphabet: Optional[str] = None


class LossRequest(MatchRequest):
    loss: LossWeights = LossWeights()


class PairResponse(BaseModel):
    gt: int
    prediction: int
    cost: float
    classification: float
    box: float
    recognition: float


class MatchResponse(BaseModel):
    cost_matrix: List[List[float]]
    assignment: List[int]
    total_cost: float
    pairs: List[PairResponse]


class LossResponse(BaseModel):
    total: float
    classification: float
    box_l1: float
    box_giou: float
    recognition: float
    assignment: List[int]


def _scene(body: MatchRequest) -> Tuple[List[Prediction], Scene]:
    alphabet = Alphabet.from_string(body.alphabet or api_settings.default_alphabet)
    record = SceneRecord(scene_id="request", gt=body.ground_truth)
    scene = scene_from_record(record, alphabet)
    try:
        preds = [
            Prediction(np.asarray(item.class_logits), Box.center_size(*item.box), np.asarray(item.char_logits))
            for item in body.predictions
        ]
    except ValidationError as e:
        raise ValidationError(f"predictions: {e}") from e
    if len({p.char_logits.shape for p in preds}) > 1:
        raise ValidationError("predictions: every char_logits matrix must have the same shape")
    if preds:
        try:
            check_logit_width(preds[0].char_logits, alphabet)
        except ValidationError as e:
            raise ValidationError(f"predictions: {e}") from e
    return preds, scene


@matching_router.post("/match", response_model=MatchResponse, status_code=status.HTTP_200_OK)
def post_match(body: MatchRequest):
    """
    Builds the cost matrix for one scene and solves the assignment.

    Args:
        body: Predictions, ground truth, matching mode and cost weights

    Returns:
        MatchResponse: Cost matrix, optimal assignment and per-pair breakdown
    """
    logger.debug(f"MatchRequest: mode={body.mode.value} preds={len(body.predictions)} gt={len(body.ground_truth)}")
    try:
        preds, scene = _scene(body)
        costs, result = match_predictions(preds, scene.ground_truth, body.cost, body.mode)
    except SpotError as e:
        raise as_http_error(e)
    return MatchResponse(
        cost_matrix=costs.values.tolist(),
        assignment=list(result.assignment),
        total_cost=result.total_cost,
        pairs=[
            PairResponse(
                gt=p.row,
                prediction=p.col,
                cost=p.cost,
                classification=p.classification,
                box=p.box,
                recognition=p.recognition,
            )
            for p in result.pairs
        ],
    )


@matching_router.post("/loss", response_model=LossResponse, status_code=status.HTTP_200_OK)
def post_loss(body: LossRequest):
    """
    Evaluates the Text Hungarian Loss of one scene.

    Args:
        body: Predictions, ground truth, mode, cost and loss weights

    Returns:
        LossResponse: The loss breakdown and the assignment it was computed at
    """
    try:
        preds, scene = _scene(body)
        breakdown = hungarian_loss(preds, scene.ground_truth, body.cost, body.loss, body.mode)
    except SpotError as e:
        raise as_http_error(e)
    return LossResponse(
        total=breakdown.total,
        classification=breakdown.classification,
        box_l1=breakdown.box_l1,
        box_giou=breakdown.box_giou,
        recognition=breakdown.recognition,
        assignment=list(breakdown.matching.assignment),
    )
