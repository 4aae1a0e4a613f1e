"""
Line-delimited JSON formats for scenes and predictions.

Scene line:       {"scene_id", "features", "gt": [{"cls", "box"?, "text"?}], "supervision"}
Prediction line:  {"scene_id", "preds": [{"score_text", "box", "text"}]}
Raw line:         {"scene_id", "preds": [{"class_logits", "box", "char_logits"}]}

Boxes are [cx, cy, w, h] normalized to [0, 1].
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from domain.alphabet import DEFAULT_MAX_WORD_LEN, Alphabet, greedy_decode
from domain.types import GroundTruthInstance, ObjectClass, Prediction, Scene, Supervision
from geometry import Box
from utils.errors import ParseError, ValidationError

PathLike = Union[str, Path]


class InstanceRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cls: ObjectClass
    box: Optional[Tuple[float, float, float, float]] = None
    text: Optional[str] = None


class SceneRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene_id: Optional[str] = None
    features: List[List[float]] = Field(default_factory=list)
    gt: List[InstanceRecord] = Field(default_factory=list)
    supervision: Optional[Supervision] = None


class PredictionItem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    score_text: float = Field(ge=0.0, le=1.0)
    box: Tuple[float, float, float, float]
    text: str


class PredictionLine(BaseModel):
    scene_id: str
    preds: List[PredictionItem] = Field(default_factory=list)


class RawPredictionItem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    class_logits: Tuple[float, float]
    box: Tuple[float, float, float, float]
    char_logits: List[List[float]]


class RawPredictionLine(BaseModel):
    scene_id: str
    preds: List[RawPredictionItem] = Field(default_factory=list)


@dataclass(frozen=True)
class PredictionRecord:
    """A decoded prediction as stored on disk."""

    score_text: float
    box: Box
    text: str


def _iter_lines(path: PathLike) -> Iterator[Tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"malformed JSON: {e.msg}", line_no) from e
            if not isinstance(payload, dict):
                raise ParseError("expected a JSON object", line_no)
            yield line_no, payload


def _box(values: Sequence[float], line_no: int) -> Box:
    try:
        return Box.center_size(*values)
    except ValidationError as e:
        raise ValidationError(f"line {line_no}: {e}") from e


def scene_from_record(
    record: SceneRecord, alphabet: Alphabet, line_no: int = 0, max_word_len: int = DEFAULT_MAX_WORD_LEN
) -> Scene:
    boxed = [inst.box is not None for inst in record.gt if inst.cls == ObjectClass.TEXT]
    if record.supervision is not None:
        supervision = record.supervision
    elif all(boxed):
        supervision = Supervision.FULL
    elif not any(boxed):
        supervision = Supervision.WEAK
    else:
        raise ValidationError(f"line {line_no}: scene mixes boxed and box-less instances")

    instances = []
    for inst in record.gt:
        if inst.cls == ObjectClass.NO_OBJECT:
            if inst.box is not None or inst.text is not None:
                raise ValidationError(f"line {line_no}: no_object instances carry no box or text")
            instances.append(GroundTruthInstance(ObjectClass.NO_OBJECT))
            continue
        if inst.text is None:
            raise ValidationError(f"line {line_no}: text instance without a transcription")
        try:
            transcription = alphabet.encode(inst.text, max_word_len=max_word_len)
        except ValidationError as e:
            raise ValidationError(f"line {line_no}: {e}") from e
        box = _box(inst.box, line_no) if inst.box is not None else None
        instances.append(GroundTruthInstance(ObjectClass.TEXT, box, transcription))

    try:
        return Scene(
            scene_id=record.scene_id or f"scene-{line_no}",
            features=np.asarray(record.features, dtype=np.float64),
            ground_truth=tuple(instances),
            supervision=supervision,
        )
    except ValidationError as e:
        raise ValidationError(f"line {line_no}: {e}") from e


def parse_dataset(
    path: PathLike, alphabet: Alphabet, max_word_len: int = DEFAULT_MAX_WORD_LEN
) -> List[Scene]:
    """
    Parse a scene file, one scene per line, in file order.

    Args:
        path: Line-delimited JSON file
        alphabet: Alphabet every transcription must be drawn from
        max_word_len: Longest admissible transcription

    Returns:
        List[Scene]: Validated scenes

    Raises:
        ParseError: A line is not a JSON object matching the scene schema
        ValidationError: A scene violates a type invariant
    """
    scenes = []
    for line_no, payload in _iter_lines(path):
        try:
            record = SceneRecord.model_validate(payload)
        except PydanticValidationError as e:
            raise ParseError(str(e.errors()[0]["msg"]), line_no) from e
        scenes.append(scene_from_record(record, alphabet, line_no, max_word_len))
    logger.debug(f"Parsed {len(scenes)} scenes from {path}")
    return scenes


def scene_to_record(scene: Scene, alphabet: Alphabet) -> dict:
    gt = []
    for inst in scene.ground_truth:
        item: dict = {"cls": inst.cls.value}
        if inst.box is not None:
            item["box"] = list(inst.box.coords)
        if inst.transcription is not None:
            item["text"] = alphabet.decode(inst.transcription.indices)
        gt.append(item)
    return {
        "scene_id": scene.scene_id,
        "features": scene.features.tolist(),
        "gt": gt,
        "supervision": scene.supervision.value,
    }


def write_dataset(scenes: Sequence[Scene], alphabet: Alphabet, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for scene in scenes:
            handle.write(json.dumps(scene_to_record(scene, alphabet)) + "\n")
    logger.debug(f"Wrote {len(scenes)} scenes to {path}")
    return path


def decode_prediction(prediction: Prediction, alphabet: Alphabet) -> PredictionRecord:
    return PredictionRecord(
        score_text=prediction.text_probability,
        box=prediction.box,
        text=greedy_decode(prediction.char_logits, alphabet),
    )


def serialize_predictions(
    predictions: Sequence[Tuple[str, Sequence[Prediction]]], alphabet: Alphabet, path: PathLike
) -> Path:
    """Greedy-decode every prediction and write one prediction line per scene."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for scene_id, preds in predictions:
            items = []
            for pred in preds:
                record = decode_prediction(pred, alphabet)
                items.append({"score_text": record.score_text, "box": list(record.box.coords), "text": record.text})
            handle.write(json.dumps({"scene_id": scene_id, "preds": items}) + "\n")
    logger.debug(f"Wrote predictions for {len(predictions)} scenes to {path}")
    return path


def parse_predictions(path: PathLike, alphabet: Alphabet) -> List[Tuple[str, List[PredictionRecord]]]:
    """
    Parse a decoded prediction file. Scene lines (carrying ``gt``) are accepted too:
    each boxed text instance becomes a prediction with score 1.
    """
    result = []
    for line_no, payload in _iter_lines(path):
        if "gt" in payload:
            try:
                scene = scene_from_record(SceneRecord.model_validate(payload), alphabet, line_no)
            except PydanticValidationError as e:
                raise ParseError(str(e.errors()[0]["msg"]), line_no) from e
            records = [
                PredictionRecord(1.0, inst.box, alphabet.decode(inst.transcription.indices))
                for inst in scene.words
                if inst.box is not None and inst.transcription is not None
            ]
            result.append((scene.scene_id, records))
            continue
        try:
            line = PredictionLine.model_validate(payload)
        except PydanticValidationError as e:
            raise ParseError(str(e.errors()[0]["msg"]), line_no) from e
        records = [PredictionRecord(item.score_text, _box(item.box, line_no), item.text) for item in line.preds]
        result.append((line.scene_id, records))
    return result


def write_raw_predictions(predictions: Sequence[Tuple[str, Sequence[Prediction]]], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for scene_id, preds in predictions:
            items = [
                {
                    "class_logits": pred.class_logits.tolist(),
                    "box": list(pred.box.coords),
                    "char_logits": pred.char_logits.tolist(),
                }
                for pred in preds
            ]
            handle.write(json.dumps({"scene_id": scene_id, "preds": items}) + "\n")
    return path


def parse_raw_predictions(path: PathLike) -> List[Tuple[str, List[Prediction]]]:
    """Parse undecoded predictions (logits), as consumed by matching and loss inspection."""
    result = []
    for line_no, payload in _iter_lines(path):
        try:
            line = RawPredictionLine.model_validate(payload)
        except PydanticValidationError as e:
            raise ParseError(str(e.errors()[0]["msg"]), line_no) from e
        try:
            preds = [
                Prediction(np.asarray(item.class_logits), _box(item.box, line_no), np.asarray(item.char_logits))
                for item in line.preds
            ]
        except ValidationError as e:
            raise ValidationError(f"line {line_no}: {e}") from e
        result.append((line.scene_id, preds))
    return result
