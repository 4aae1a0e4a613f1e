from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pytest

from domain import Alphabet, GroundTruthInstance, ObjectClass, Prediction, Transcription
from geometry import Box
from toygym import WorldConfig
from utils.log import configure_logging


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging("WARNING")


@pytest.fixture
def alphabet_ab() -> Alphabet:
    """Symbols a, b plus EOS and PAD: l = 4."""
    return Alphabet.from_string("ab")


@pytest.fixture
def alphabet() -> Alphabet:
    return Alphabet.from_string("abcdefgh")


def _char_logits(indices: Sequence[int], steps: int, size: int, margin: float) -> np.ndarray:
    logits = np.zeros((steps, size))
    targets = list(indices) + [size - 2]
    for step in range(steps):
        target = targets[step] if step < len(targets) else size - 2
        logits[step, target] = margin
    return logits


@pytest.fixture
def make_prediction() -> Callable[..., Prediction]:
    """Prediction with a text-class margin, a box and char logits peaked on ``indices`` then EOS."""

    def factory(
        box: Tuple[float, float, float, float],
        indices: Sequence[int] = (),
        text_margin: float = 0.0,
        char_margin: float = 0.0,
        steps: int = 4,
        size: int = 4,
    ) -> Prediction:
        return Prediction(
            np.array([text_margin, 0.0]),
            Box.center_size(*box),
            _char_logits(indices, steps, size, char_margin),
        )

    return factory


def random_scene_instance(
    rng: np.random.Generator,
    num_preds: int = 4,
    num_gts: int = 2,
    steps: int = 5,
    size: int = 5,
    boxed: bool = True,
    words: Optional[List[Tuple[int, ...]]] = None,
) -> Tuple[List[Prediction], List[GroundTruthInstance]]:
    """Random predictions and ground truth with boxes well inside the unit frame."""
    preds = []
    for _ in range(num_preds):
        cx, cy = rng.uniform(0.3, 0.7, size=2)
        w, h = rng.uniform(0.1, 0.4, size=2)
        preds.append(
            Prediction(rng.normal(size=2), Box.center_size(cx, cy, w, h), rng.normal(size=(steps, size)))
        )
    gts = []
    for i in range(num_gts):
        if words is not None:
            indices = words[i]
        else:
            length = int(rng.integers(1, steps))
            indices = tuple(int(k) for k in rng.integers(0, size - 2, size=length))
        box = None
        if boxed:
            cx, cy = rng.uniform(0.3, 0.7, size=2)
            w, h = rng.uniform(0.1, 0.4, size=2)
            box = Box.center_size(cx, cy, w, h)
        gts.append(GroundTruthInstance(ObjectClass.TEXT, box, Transcription(indices)))
    return preds, gts


@pytest.fixture
def random_instance() -> Callable[..., Tuple[List[Prediction], List[GroundTruthInstance]]]:
    return random_scene_instance


@pytest.fixture
def small_world() -> WorldConfig:
    """A world small enough for per-test training runs."""
    return WorldConfig(
        grid_rows=2,
        grid_cols=2,
        min_words=1,
        max_words=2,
        min_word_len=1,
        max_word_len=2,
        symbols="abcd",
        max_steps=3,
        feature_dim=8,
        num_queries=3,
        train_scenes=6,
        test_scenes=4,
    )
