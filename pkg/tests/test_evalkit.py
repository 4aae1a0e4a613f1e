import random

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from domain import Alphabet, GroundTruthInstance, ObjectClass, PredictionRecord, Scene, Supervision, Transcription
from evalkit import (
    EvalProtocol,
    EvalTask,
    ScoredWord,
    evaluate,
    f_measure,
    ground_truth_words,
    lexicon_correct,
    load_lexicon,
    prediction_words,
)
from geometry import Box
from utils.errors import ArgumentError, ValidationError

GT_BOX = Box.center_size(0.5, 0.5, 0.2, 0.1)


def _shifted(dx):
    return Box.center_size(0.5 + dx, 0.5, 0.2, 0.1)


def _single(pred_text, pred_box, protocol=EvalProtocol(), gt_text="hello"):
    return evaluate({"s": [ScoredWord(pred_box, pred_text)]}, {"s": [ScoredWord(GT_BOX, gt_text)]}, protocol)


def test_single_correct_match():
    report = _single("hello", _shifted(0.05))  # IoU 0.6
    assert (report.precision, report.recall, report.f_measure) == (1.0, 1.0, 1.0)
    (pair,) = report.matched
    assert pair.iou == pytest.approx(0.6)


def test_overlap_below_threshold():
    report = _single("hello", _shifted(0.09))  # IoU 0.11 / 0.29
    assert report.f_measure == 0.0


def test_lexicon_correction_rescues_a_typo():
    assert _single("hell0", _shifted(0.05)).f_measure == 0.0
    protocol = EvalProtocol(task=EvalTask.END_TO_END, lexicon=("hello", "world"))
    assert _single("hell0", _shifted(0.05), protocol).f_measure == 1.0


def test_end_to_end_is_case_insensitive_but_exact():
    assert _single("HeLLo", GT_BOX).f_measure == 1.0
    assert _single("hello.", GT_BOX).f_measure == 0.0


def test_word_spotting_strips_punctuation():
    protocol = EvalProtocol(task=EvalTask.WORD_SPOTTING)
    assert _single("hello.", GT_BOX, protocol).f_measure == 1.0


def test_word_spotting_ignores_dont_care_words():
    protocol = EvalProtocol(task=EvalTask.WORD_SPOTTING)
    gts = {"s": [ScoredWord(GT_BOX, "hello"), ScoredWord(Box.center_size(0.2, 0.2, 0.1, 0.1), "ab")]}
    preds = {"s": [ScoredWord(GT_BOX, "hello"), ScoredWord(Box.center_size(0.2, 0.2, 0.1, 0.1), "xy")]}
    report = evaluate(preds, gts, protocol)
    assert report.scenes[0].num_ground_truth == 1
    assert report.scenes[0].num_predictions == 1
    assert report.f_measure == 1.0


def test_detection_ignores_text():
    protocol = EvalProtocol(task=EvalTask.DETECTION)
    assert _single("zzz", _shifted(0.05), protocol).f_measure == 1.0


def test_score_threshold_drops_low_confidence_predictions():
    gts = {"s": [ScoredWord(GT_BOX, "hello")]}
    preds = {"s": [ScoredWord(GT_BOX, "hello", score=0.3)]}
    assert evaluate(preds, gts, EvalProtocol()).f_measure == 0.0
    assert evaluate(preds, gts, EvalProtocol(score_threshold=0.2)).f_measure == 1.0


def test_one_to_one_matching():
    gts = {"s": [ScoredWord(GT_BOX, "hello")]}
    preds = {"s": [ScoredWord(GT_BOX, "hello"), ScoredWord(_shifted(0.01), "hello")]}
    report = evaluate(preds, gts, EvalProtocol())
    assert report.true_positives == 1
    assert report.precision == 0.5
    assert report.recall == 1.0
    assert report.matched[0].prediction.box == GT_BOX


def test_unknown_scene_is_rejected():
    with pytest.raises(ValidationError, match="ghost"):
        evaluate({"ghost": []}, {"s": []}, EvalProtocol())


def test_empty_evaluation_is_perfect():
    report = evaluate({}, {"s": []}, EvalProtocol())
    assert report.f_measure == 1.0


def test_f_measure_formula():
    assert f_measure(0.5, 1.0) == pytest.approx(2.0 / 3.0)
    assert f_measure(0.0, 0.0) == 0.0


def test_protocol_validation():
    with pytest.raises(PydanticValidationError):
        EvalProtocol(iou_threshold=0.0)
    with pytest.raises(PydanticValidationError):
        EvalProtocol(iou_threshold=1.5)
    with pytest.raises(PydanticValidationError):
        EvalProtocol(lexicon=())


@pytest.mark.parametrize(
    "word, lexicon, expected",
    [
        ("hello", ("world", "hello"), "hello"),
        ("hell0", ("hello", "world"), "hello"),
        ("zzzzzz", ("hello",), "zzzzzz"),
        ("HELL0", ("hello",), "hello"),
        ("cat", ("bat", "cap"), "bat"),
    ],
)
def test_lexicon_correct(word, lexicon, expected):
    assert lexicon_correct(word, lexicon) == expected


def test_lexicon_correct_needs_entries():
    with pytest.raises(ArgumentError):
        lexicon_correct("hello", [])


def test_load_lexicon(tmp_path):
    path = tmp_path / "lexicon.txt"
    path.write_text("hello\n\n world \n")
    assert load_lexicon(path) == ["hello", "world"]


def _grid_scene(rng, alphabet="abcdef", size=3):
    """Ground truth on a well separated grid; one jittered, possibly misspelled prediction per word."""
    gts, preds = [], []
    for row in range(size):
        for col in range(size):
            if rng.random() < 0.3:
                continue
            box = Box.center_size((col + 0.5) / size, (row + 0.5) / size, 0.2, 0.1)
            text = "".join(rng.choice(list(alphabet), size=int(rng.integers(3, 6))))
            gts.append(ScoredWord(box, text))
            jitter = rng.uniform(-0.03, 0.03, size=2)
            pred_box = Box.center_size(box.coords[0] + jitter[0], box.coords[1] + jitter[1], 0.2, 0.1)
            roll = rng.random()
            if roll < 0.5:
                pred_text = text
            elif roll < 0.8:
                pred_text = text[:-1] + ("z" if text[-1] != "z" else "y")
            else:
                pred_text = "qqqq"
            preds.append(ScoredWord(pred_box, pred_text, float(rng.uniform(0.5, 1.0))))
    return gts, preds


def _random_split(seed, scenes=8):
    rng = np.random.default_rng(seed)
    gts, preds = {}, {}
    for i in range(scenes):
        gts[f"s{i}"], preds[f"s{i}"] = _grid_scene(rng)
    return preds, gts


@pytest.mark.parametrize("task", list(EvalTask))
@pytest.mark.parametrize("threshold", [0.1, 0.5, 0.9, 1.0])
def test_ground_truth_against_itself(task, threshold):
    _, gts = _random_split(0)
    report = evaluate(gts, gts, EvalProtocol(task=task, iou_threshold=threshold))
    assert (report.precision, report.recall, report.f_measure) == (1.0, 1.0, 1.0)


@pytest.mark.parametrize("seed", range(10))
def test_recall_never_increases_with_threshold(seed):
    preds, gts = _random_split(seed)
    recalls = [
        evaluate(preds, gts, EvalProtocol(iou_threshold=t)).recall for t in np.linspace(0.05, 1.0, 20)
    ]
    assert all(a >= b for a, b in zip(recalls, recalls[1:]))


@pytest.mark.parametrize("seed", range(10))
def test_prediction_order_does_not_matter(seed):
    preds, gts = _random_split(seed)
    shuffler = random.Random(seed)
    shuffled = {}
    for scene_id, words in preds.items():
        words = list(words)
        shuffler.shuffle(words)
        shuffled[scene_id] = words
    protocol = EvalProtocol(lexicon=("abcd", "fedc"))
    assert evaluate(preds, gts, protocol) == evaluate(shuffled, gts, protocol)


@pytest.mark.parametrize("seed", range(10))
def test_adding_ground_truth_words_to_the_lexicon_never_hurts(seed):
    preds, gts = _random_split(seed)
    distractors = ("qqqqqq", "zzzzzz")
    truth = tuple(sorted({w.text for words in gts.values() for w in words}))
    base = evaluate(preds, gts, EvalProtocol(lexicon=distractors))
    richer = evaluate(preds, gts, EvalProtocol(lexicon=distractors + truth))
    assert richer.f_measure >= base.f_measure


def test_ground_truth_words_need_boxes():
    alphabet = Alphabet.from_string("ab")
    weak = Scene(
        "w", np.zeros((1, 1)), (GroundTruthInstance(ObjectClass.TEXT, None, Transcription((0,))),), Supervision.WEAK
    )
    with pytest.raises(ValidationError):
        ground_truth_words(weak, alphabet)
    full = Scene("f", np.zeros((1, 1)), (GroundTruthInstance(ObjectClass.TEXT, GT_BOX, Transcription((1, 0))),))
    assert ground_truth_words(full, alphabet) == [ScoredWord(GT_BOX, "ba")]


def test_prediction_words_keep_scores():
    (word,) = prediction_words([PredictionRecord(0.7, GT_BOX, "ab")])
    assert word == ScoredWord(GT_BOX, "ab", 0.7)
