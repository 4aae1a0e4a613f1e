"""
Word-spotting, end-to-end and detection evaluation with axis-aligned IoU.

Within a scene, every (ground truth, prediction) pair that clears the IoU
threshold and agrees on the transcription is a candidate; candidates are
taken greedily by descending IoU, one-to-one. Ties are broken on content
(ground-truth index, then score, box and text of the prediction) so the
report does not depend on the order predictions are listed in.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from domain import Alphabet, PredictionRecord, Scene
from evalkit.lexicon import lexicon_correct
from geometry import Box, iou
from utils.errors import ValidationError

MIN_SPOTTING_LENGTH = 3


class EvalTask(str, Enum):
    WORD_SPOTTING = "word_spotting"
    END_TO_END = "end_to_end"
    DETECTION = "detection"


class EvalProtocol(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    task: EvalTask = EvalTask.END_TO_END
    iou_threshold: float = Field(0.5, gt=0.0, le=1.0)
    lexicon: Optional[Tuple[str, ...]] = None
    # predictions below this text probability are dropped before matching
    score_threshold: float = Field(0.5, ge=0.0, le=1.0)

    @field_validator("lexicon")
    @classmethod
    def check_lexicon(cls, lexicon: Optional[Tuple[str, ...]]) -> Optional[Tuple[str, ...]]:
        if lexicon is not None:
            if not lexicon:
                raise ValueError("lexicon must not be empty; omit it to evaluate without one")
            if any(not word.strip() for word in lexicon):
                raise ValueError("lexicon words must be non-empty")
        return lexicon


@dataclass(frozen=True)
class ScoredWord:
    box: Box
    text: str
    score: float = 1.0


@dataclass(frozen=True)
class MatchedPair:
    scene_id: str
    gt_index: int
    prediction: ScoredWord
    iou: float


@dataclass(frozen=True)
class SceneCounts:
    scene_id: str
    true_positives: int
    num_predictions: int
    num_ground_truth: int


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    matched: Tuple[MatchedPair, ...]
    scenes: Tuple[SceneCounts, ...]

    @property
    def true_positives(self) -> int:
        return sum(s.true_positives for s in self.scenes)


def normalize_text(text: str, task: EvalTask) -> str:
    folded = text.casefold()
    if task == EvalTask.WORD_SPOTTING:
        return "".join(ch for ch in folded if ch.isalnum())
    return folded


def is_dont_care(text: str, task: EvalTask) -> bool:
    """Word spotting ignores short words and words with non-alphanumeric characters."""
    if task != EvalTask.WORD_SPOTTING:
        return False
    return len(text) < MIN_SPOTTING_LENGTH or not text.isalnum()


def _ratio(hits: int, total: int, other: int) -> float:
    if total == 0:
        return 1.0 if other == 0 else 0.0
    return hits / total


def f_measure(precision: float, recall: float) -> float:
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _sort_key(candidate: Tuple[float, int, ScoredWord]) -> tuple:
    overlap, gt_index, word = candidate
    return (-overlap, gt_index, -word.score, word.box.fmt.value, word.box.coords, word.text)


def _evaluate_scene(
    scene_id: str, preds: Sequence[ScoredWord], gts: Sequence[ScoredWord], protocol: EvalProtocol
) -> Tuple[SceneCounts, List[MatchedPair]]:
    task = protocol.task
    kept = [p for p in preds if p.score >= protocol.score_threshold]
    if protocol.lexicon is not None and task != EvalTask.DETECTION:
        kept = [ScoredWord(p.box, lexicon_correct(p.text, protocol.lexicon), p.score) for p in kept]

    cares = [not is_dont_care(g.text, task) for g in gts]
    candidates = []
    for gt_index, gt in enumerate(gts):
        if not cares[gt_index]:
            continue
        target = normalize_text(gt.text, task)
        for pred in kept:
            overlap = iou(gt.box, pred.box)
            if overlap < protocol.iou_threshold:
                continue
            if task != EvalTask.DETECTION and normalize_text(pred.text, task) != target:
                continue
            candidates.append((overlap, gt_index, pred))
    candidates.sort(key=_sort_key)

    # predictions are identified by content; equal ones are interchangeable
    remaining: Dict[ScoredWord, int] = {}
    for pred in kept:
        remaining[pred] = remaining.get(pred, 0) + 1
    used_gt = set()
    matched = []
    for overlap, gt_index, pred in candidates:
        if gt_index in used_gt or remaining[pred] == 0:
            continue
        used_gt.add(gt_index)
        remaining[pred] -= 1
        matched.append(MatchedPair(scene_id, gt_index, pred, overlap))

    # unmatched predictions lying on a don't-care word count neither way
    ignored = 0
    if not all(cares):
        dont_care = [g for g, care in zip(gts, cares) if not care]
        for pred, count in remaining.items():
            if count and any(iou(g.box, pred.box) >= protocol.iou_threshold for g in dont_care):
                ignored += count

    counts = SceneCounts(
        scene_id=scene_id,
        true_positives=len(matched),
        num_predictions=len(kept) - ignored,
        num_ground_truth=sum(cares),
    )
    return counts, matched


def evaluate(
    preds_by_scene: Mapping[str, Sequence[ScoredWord]],
    gts_by_scene: Mapping[str, Sequence[ScoredWord]],
    protocol: EvalProtocol,
) -> EvalReport:
    """
    Precision, recall and F-measure over all scenes.

    Args:
        preds_by_scene: Decoded predictions per scene id
        gts_by_scene: Ground-truth words per scene id; scenes without predictions count as misses
        protocol: Task, IoU threshold, optional lexicon and score threshold

    Returns:
        EvalReport: Totals, the matched pairs and per-scene counts (in ground-truth scene order)

    Raises:
        ValidationError: A prediction scene id is not in the ground truth
    """
    unknown = sorted(set(preds_by_scene) - set(gts_by_scene))
    if unknown:
        raise ValidationError(f"Predictions for unknown scene ids: {', '.join(unknown[:5])}")

    scenes: List[SceneCounts] = []
    matched: List[MatchedPair] = []
    for scene_id, gts in gts_by_scene.items():
        counts, pairs = _evaluate_scene(scene_id, preds_by_scene.get(scene_id, ()), gts, protocol)
        scenes.append(counts)
        matched.extend(pairs)

    hits = sum(s.true_positives for s in scenes)
    num_preds = sum(s.num_predictions for s in scenes)
    num_gts = sum(s.num_ground_truth for s in scenes)
    precision = _ratio(hits, num_preds, num_gts)
    recall = _ratio(hits, num_gts, num_preds)
    return EvalReport(
        precision=precision,
        recall=recall,
        f_measure=f_measure(precision, recall),
        matched=tuple(matched),
        scenes=tuple(scenes),
    )


def ground_truth_words(scene: Scene, alphabet: Alphabet) -> List[ScoredWord]:
    """The scene's boxed text instances as evaluation targets."""
    words = []
    for inst in scene.words:
        if inst.box is None:
            raise ValidationError(f"Scene {scene.scene_id}: evaluation needs ground-truth boxes")
        words.append(ScoredWord(inst.box, alphabet.decode(inst.transcription.indices)))  # type: ignore[union-attr]
    return words


def prediction_words(records: Sequence[PredictionRecord]) -> List[ScoredWord]:
    return [ScoredWord(r.box, r.text, r.score_text) for r in records]
