from typing import List, Tuple

from fastapi import APIRouter, status
from loguru import logger
from pydantic import BaseModel, Field

from api.errors import as_http_error
from domain.io import PredictionItem
from evalkit import EvalProtocol, ScoredWord, evaluate
from geometry import Box
from utils.errors import SpotError

######################################################
## Routes for the evaluation protocol
######################################################

evaluation_router = APIRouter(tags=["Evaluation"])


class GroundTruthWord(BaseModel):
    box: Tuple[float, float, float, float]
    text: str


class EvalScene(BaseModel):
    scene_id: str
    ground_truth: List[GroundTruthWord] = Field(default_factory=list)
    predictions: List[PredictionItem] = Field(default_factory=list)


class EvalRequest(BaseModel):
    protocol: EvalProtocol = EvalProtocol()
    scenes: List[EvalScene]


class SceneScore(BaseModel):
    scene_id: str
    true_positives: int
    num_predictions: int
    num_ground_truth: int


class EvalResponse(BaseModel):
    precision: float
    recall: float
    f_measure: float
    scenes: List[SceneScore]


@evaluation_router.post("/eval", response_model=EvalResponse, status_code=status.HTTP_200_OK)
def post_eval(body: EvalRequest):
    """
    Scores decoded predictions against ground-truth words.

    Args:
        body: Evaluation protocol and the scenes to score

    Returns:
        EvalResponse: Precision, recall, F-measure and per-scene counts
    """
    logger.debug(f"EvalRequest: task={body.protocol.task.value} scenes={len(body.scenes)}")
    try:
        gts = {s.scene_id: [ScoredWord(Box.center_size(*w.box), w.text) for w in s.ground_truth] for s in body.scenes}
        preds = {
            s.scene_id: [ScoredWord(Box.center_size(*p.box), p.text, p.score_text) for p in s.predictions]
            for s in body.scenes
        }
        report = evaluate(preds, gts, body.protocol)
    except SpotError as e:
        raise as_http_error(e)
    return EvalResponse(
        precision=report.precision,
        recall=report.recall,
        f_measure=report.f_measure,
        scenes=[SceneScore(**vars(s)) for s in report.scenes],
    )
