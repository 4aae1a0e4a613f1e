from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from domain.alphabet import Transcription
from geometry import Box, BoxFormat
from utils.errors import ValidationError


class ObjectClass(str, Enum):
    TEXT = "text"
    NO_OBJECT = "no_object"

    @property
    def index(self) -> int:
        """Position of this class in a prediction's class_logits."""
        return 0 if self is ObjectClass.TEXT else 1


class Supervision(str, Enum):
    FULL = "full"
    WEAK = "weak"


@dataclass(frozen=True)
class GroundTruthInstance:
    cls: ObjectClass
    box: Optional[Box] = None
    transcription: Optional[Transcription] = None

    def __post_init__(self):
        if self.cls == ObjectClass.TEXT and self.transcription is None:
            raise ValidationError("Text instances need a transcription")
        if self.cls == ObjectClass.NO_OBJECT and (self.box is not None or self.transcription is not None):
            raise ValidationError("NoObject instances carry neither box nor transcription")
        if self.box is not None and self.box.fmt != BoxFormat.CENTER_SIZE:
            raise ValidationError("Ground-truth boxes are stored in center-size form")


@dataclass(frozen=True, eq=False)
class Prediction:
    """One object query's output: class logits (Text, NoObject), a center-size box, per-step char logits."""

    class_logits: np.ndarray
    box: Box
    char_logits: np.ndarray

    def __post_init__(self):
        class_logits = np.asarray(self.class_logits, dtype=np.float64)
        char_logits = np.asarray(self.char_logits, dtype=np.float64)
        if class_logits.shape != (2,):
            raise ValidationError(f"class_logits must have shape (2,), got {class_logits.shape}")
        if char_logits.ndim != 2:
            raise ValidationError(f"char_logits must be a max_word_len x l matrix, got {char_logits.shape}")
        if not (np.all(np.isfinite(class_logits)) and np.all(np.isfinite(char_logits))):
            raise ValidationError("Prediction logits must be finite")
        if self.box.fmt != BoxFormat.CENTER_SIZE:
            raise ValidationError("Predicted boxes are center-size normalized")
        object.__setattr__(self, "class_logits", class_logits)
        object.__setattr__(self, "char_logits", char_logits)

    @property
    def max_word_len(self) -> int:
        return int(self.char_logits.shape[0])

    @property
    def text_probability(self) -> float:
        z = self.class_logits - np.max(self.class_logits)
        p = np.exp(z)
        return float(p[0] / p.sum())


@dataclass(frozen=True, eq=False)
class Scene:
    scene_id: str
    features: np.ndarray
    ground_truth: Tuple[GroundTruthInstance, ...]
    supervision: Supervision = Supervision.FULL

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        texts = [g for g in self.ground_truth if g.cls == ObjectClass.TEXT]
        if self.supervision == Supervision.WEAK:
            if any(g.box is not None for g in self.ground_truth):
                raise ValidationError(f"Scene {self.scene_id}: weak scenes carry no boxes")
        elif any(g.box is None for g in texts):
            raise ValidationError(f"Scene {self.scene_id}: fully supervised text instances need boxes")

    @property
    def words(self) -> Tuple[GroundTruthInstance, ...]:
        """The Text instances, in file order."""
        return tuple(g for g in self.ground_truth if g.cls == ObjectClass.TEXT)


