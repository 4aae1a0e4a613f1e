import json

import numpy as np
import pytest

from domain import (
    Alphabet,
    GroundTruthInstance,
    ObjectClass,
    Prediction,
    Scene,
    Supervision,
    Transcription,
    check_logit_width,
    greedy_decode,
    parse_dataset,
    parse_predictions,
    parse_raw_predictions,
    serialize_predictions,
    word_targets,
    write_dataset,
    write_raw_predictions,
)
from geometry import Box
from utils.errors import ParseError, ValidationError


def _write_lines(path, *payloads):
    path.write_text("".join((p if isinstance(p, str) else json.dumps(p)) + "\n" for p in payloads))
    return path


def test_alphabet_reserves_eos_and_pad(alphabet_ab):
    assert alphabet_ab.eos == 2
    assert alphabet_ab.pad == 3
    assert alphabet_ab.size == 4


def test_word_targets_end_with_eos(alphabet_ab):
    targets = word_targets(Transcription((1, 0)), alphabet_ab.size)
    assert targets.tolist() == [1, 0, alphabet_ab.eos]


@pytest.mark.parametrize("width", [3, 6])
def test_logit_width_must_match_alphabet(alphabet_ab, width):
    check_logit_width(np.zeros((4, 4)), alphabet_ab)
    with pytest.raises(ValidationError, match="alphabet needs 4"):
        check_logit_width(np.zeros((4, width)), alphabet_ab)


def test_alphabet_rejects_duplicates():
    with pytest.raises(ValidationError):
        Alphabet.from_string("aba")


def test_alphabet_casefolds_on_encode():
    alphabet = Alphabet.default()
    assert alphabet.encode("Hello").indices == alphabet.encode("hello").indices


def test_transcription_needs_a_character():
    with pytest.raises(ValidationError):
        Transcription(())


def test_encode_rejects_overlong_words(alphabet_ab):
    with pytest.raises(ValidationError, match="max_word_len"):
        alphabet_ab.encode("abab", max_word_len=3)


def test_ground_truth_invariants():
    with pytest.raises(ValidationError):
        GroundTruthInstance(ObjectClass.TEXT, Box.center_size(0.5, 0.5, 0.1, 0.1))
    with pytest.raises(ValidationError):
        GroundTruthInstance(ObjectClass.NO_OBJECT, Box.center_size(0.5, 0.5, 0.1, 0.1))


def test_weak_scene_rejects_boxes():
    inst = GroundTruthInstance(ObjectClass.TEXT, Box.center_size(0.5, 0.5, 0.1, 0.1), Transcription((0,)))
    with pytest.raises(ValidationError):
        Scene("s", np.zeros((1, 1)), (inst,), Supervision.WEAK)


def test_parse_dataset_single_text_instance(tmp_path, alphabet_ab):
    path = _write_lines(
        tmp_path / "scenes.jsonl",
        {"scene_id": "s0", "gt": [{"cls": "text", "box": [0.5, 0.5, 0.2, 0.1], "text": "ab"}]},
    )
    scenes = parse_dataset(path, alphabet_ab)
    assert len(scenes) == 1
    scene = scenes[0]
    assert scene.scene_id == "s0"
    assert scene.supervision == Supervision.FULL
    assert len(scene.words) == 1
    assert scene.words[0].box == Box.center_size(0.5, 0.5, 0.2, 0.1)
    assert scene.words[0].transcription.indices == (0, 1)


def test_parse_dataset_names_unknown_character(tmp_path, alphabet_ab):
    path = _write_lines(
        tmp_path / "scenes.jsonl",
        {"scene_id": "s0", "gt": [{"cls": "text", "box": [0.5, 0.5, 0.2, 0.1], "text": "a$"}]},
    )
    with pytest.raises(ValidationError, match=r"'\$'"):
        parse_dataset(path, alphabet_ab)


def test_parse_dataset_weak_duplicates(tmp_path):
    alphabet = Alphabet.default()
    payload = {"gt": [{"cls": "text", "text": "as"}, {"cls": "text", "text": "as"}]}
    path = _write_lines(tmp_path / "weak.jsonl", payload)
    (scene,) = parse_dataset(path, alphabet)
    assert scene.supervision == Supervision.WEAK
    assert len(scene.words) == 2
    assert all(w.box is None for w in scene.words)
    assert scene.words[0].transcription == scene.words[1].transcription


def test_parse_dataset_reports_line_number(tmp_path, alphabet_ab):
    path = _write_lines(tmp_path / "bad.jsonl", {"scene_id": "ok", "gt": []}, "{not json")
    with pytest.raises(ParseError) as info:
        parse_dataset(path, alphabet_ab)
    assert info.value.line_no == 2
    assert str(info.value).startswith("line 2:")


def test_parse_dataset_rejects_mixed_supervision(tmp_path, alphabet_ab):
    path = _write_lines(
        tmp_path / "mixed.jsonl",
        {"gt": [{"cls": "text", "box": [0.5, 0.5, 0.2, 0.1], "text": "a"}, {"cls": "text", "text": "b"}]},
    )
    with pytest.raises(ValidationError, match="mixes"):
        parse_dataset(path, alphabet_ab)


def test_dataset_round_trip(tmp_path, alphabet_ab):
    scene = Scene(
        "s1",
        np.arange(6, dtype=float).reshape(2, 3),
        (
            GroundTruthInstance(ObjectClass.TEXT, Box.center_size(0.25, 0.75, 0.125, 0.1), Transcription((1, 0))),
            GroundTruthInstance(ObjectClass.NO_OBJECT),
        ),
    )
    path = write_dataset([scene], alphabet_ab, tmp_path / "out.jsonl")
    (loaded,) = parse_dataset(path, alphabet_ab)
    assert loaded.scene_id == "s1"
    assert np.array_equal(loaded.features, scene.features)
    assert loaded.ground_truth == scene.ground_truth


def test_serialize_empty_prediction_list(tmp_path, alphabet_ab):
    path = serialize_predictions([], alphabet_ab, tmp_path / "preds.jsonl")
    assert path.read_text() == ""
    assert parse_predictions(path, alphabet_ab) == []


def test_greedy_decode_stops_at_eos(alphabet_ab):
    logits = np.array([[5.0, 0.0, 0.0, 0.0], [0.0, 0.0, 5.0, 0.0], [0.0, 5.0, 0.0, 0.0]])
    assert greedy_decode(logits, alphabet_ab) == "a"


def test_serialize_decodes_greedily(tmp_path, alphabet_ab):
    pred = Prediction(
        np.array([1.0, 0.0]),
        Box.center_size(0.5, 0.5, 0.2, 0.2),
        np.array([[5.0, 0.0, 0.0, 0.0], [0.0, 0.0, 5.0, 0.0]]),
    )
    path = serialize_predictions([("s0", [pred])], alphabet_ab, tmp_path / "preds.jsonl")
    ((scene_id, (record,)),) = parse_predictions(path, alphabet_ab)
    assert scene_id == "s0"
    assert record.text == "a"
    assert record.score_text == pytest.approx(pred.text_probability)


def test_serialize_then_parse_preserves_values(tmp_path):
    alphabet = Alphabet.from_string("abcdef")
    rng = np.random.default_rng(3)
    preds = [
        Prediction(
            rng.normal(size=2),
            Box.center_size(*rng.uniform(0.0, 1.0, size=4)),
            rng.normal(size=(5, alphabet.size)),
        )
        for _ in range(100)
    ]
    path = serialize_predictions([("a", preds[:60]), ("b", preds[60:])], alphabet, tmp_path / "preds.jsonl")
    parsed = parse_predictions(path, alphabet)
    assert [scene_id for scene_id, _ in parsed] == ["a", "b"]
    records = parsed[0][1] + parsed[1][1]
    for pred, record in zip(preds, records):
        assert record.box.coords == pytest.approx(pred.box.coords, rel=1e-9)
        assert record.text == greedy_decode(pred.char_logits, alphabet)
        assert record.score_text == pred.text_probability


def test_parse_predictions_accepts_scene_lines(tmp_path, alphabet_ab):
    path = _write_lines(
        tmp_path / "gt.jsonl",
        {"scene_id": "s0", "gt": [{"cls": "text", "box": [0.5, 0.5, 0.2, 0.1], "text": "ab"}]},
    )
    ((scene_id, (record,)),) = parse_predictions(path, alphabet_ab)
    assert scene_id == "s0"
    assert record.text == "ab"
    assert record.score_text == 1.0


def test_raw_predictions_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pred = Prediction(rng.normal(size=2), Box.center_size(0.4, 0.6, 0.2, 0.3), rng.normal(size=(3, 4)))
    path = write_raw_predictions([("s0", [pred])], tmp_path / "raw.jsonl")
    ((scene_id, (loaded,)),) = parse_raw_predictions(path)
    assert scene_id == "s0"
    assert np.array_equal(loaded.class_logits, pred.class_logits)
    assert np.array_equal(loaded.char_logits, pred.char_logits)
    assert loaded.box == pred.box
