import pytest
from fastapi.testclient import TestClient
from loguru import logger

from api.main import create_app

GT_BOX = [0.5, 0.5, 0.2, 0.1]
UNIT = {"alpha_c": 1.0, "alpha_box_l1": 1.0, "alpha_box_giou": 1.0, "alpha_rec": 1.0}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def _raw(prediction):
    return {
        "class_logits": prediction.class_logits.tolist(),
        "box": list(prediction.box.coords),
        "char_logits": prediction.char_logits.tolist(),
    }


@pytest.fixture
def misread_scene(make_prediction):
    return {
        "predictions": [
            _raw(make_prediction(tuple(GT_BOX), indices=(1, 0), char_margin=3.0)),
            _raw(make_prediction((0.55, 0.5, 0.2, 0.1), indices=(0, 1), char_margin=3.0)),
        ],
        "ground_truth": [{"cls": "text", "box": GT_BOX, "text": "ab"}],
        "cost": UNIT,
        "alphabet": "ab",
    }


def test_health(client):
    response = client.get("/v1/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "success"
    assert body["match_modes"] == ["full", "weak", "detcls"]
    assert "end_to_end" in body["eval_tasks"]


@pytest.mark.parametrize("mode, expected", [("full", [1]), ("weak", [1]), ("detcls", [0])])
def test_match(client, misread_scene, mode, expected):
    response = client.post("/v1/match", json={**misread_scene, "mode": mode})
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["assignment"] == expected
    assert len(body["cost_matrix"]) == 1 and len(body["cost_matrix"][0]) == 2
    (pair,) = body["pairs"]
    assert pair["cost"] == pytest.approx(pair["classification"] + pair["box"] + pair["recognition"])
    assert body["total_cost"] == pytest.approx(pair["cost"])


def test_match_without_ground_truth(client, misread_scene):
    response = client.post("/v1/match", json={**misread_scene, "ground_truth": []})
    assert response.status_code == 200
    assert response.json()["assignment"] == []
    assert response.json()["cost_matrix"] == []


def test_loss_of_perfect_prediction(client, make_prediction):
    pred = make_prediction(tuple(GT_BOX), indices=(0, 1), text_margin=20.0, char_margin=20.0)
    body = {
        "predictions": [_raw(pred)],
        "ground_truth": [{"cls": "text", "box": GT_BOX, "text": "ab"}],
        "alphabet": "ab",
    }
    response = client.post("/v1/loss", json=body)
    assert response.status_code == 200, response.text
    assert response.json()["total"] < 1e-6
    assert response.json()["assignment"] == [0]


def test_capacity_error_is_a_bad_request(client, misread_scene):
    gts = [{"cls": "text", "box": GT_BOX, "text": "ab"}] * 3
    response = client.post("/v1/match", json={**misread_scene, "ground_truth": gts})
    assert response.status_code == 400
    assert "query count" in response.json()["detail"]


def test_unknown_character_is_unprocessable(client, misread_scene):
    gts = [{"cls": "text", "box": GT_BOX, "text": "a$"}]
    response = client.post("/v1/match", json={**misread_scene, "ground_truth": gts})
    assert response.status_code == 422
    assert "'$'" in response.json()["detail"]


def test_weak_ground_truth_refused_by_box_modes(client, misread_scene):
    gts = [{"cls": "text", "text": "ab"}]
    assert client.post("/v1/match", json={**misread_scene, "ground_truth": gts, "mode": "weak"}).status_code == 200
    assert client.post("/v1/match", json={**misread_scene, "ground_truth": gts, "mode": "full"}).status_code == 422


def test_char_logit_width_must_match_the_alphabet(client, misread_scene, make_prediction):
    narrow = {**misread_scene, "alphabet": None, "ground_truth": [{"cls": "text", "box": GT_BOX, "text": "z"}]}
    response = client.post("/v1/match", json=narrow)
    assert response.status_code == 422
    assert "38" in response.json()["detail"]

    wide = {**misread_scene, "predictions": [_raw(make_prediction(tuple(GT_BOX), indices=(0, 1), size=6))]}
    assert client.post("/v1/match", json=wide).status_code == 422
    assert client.post("/v1/loss", json=wide).status_code == 422


def test_match_requests_are_logged(client, misread_scene):
    messages = []
    handler = logger.add(messages.append, level="DEBUG", format="{message}")
    try:
        assert client.post("/v1/match", json=misread_scene).status_code == 200
    finally:
        logger.remove(handler)
    assert any("MatchRequest: mode=full" in m for m in messages)


def test_bad_request_bodies(client, misread_scene):
    assert client.post("/v1/match", json={**misread_scene, "mode": "bogus"}).status_code == 422
    zero = {"alpha_c": 0.0, "alpha_box_l1": 0.0, "alpha_box_giou": 0.0, "alpha_rec": 0.0}
    assert client.post("/v1/match", json={**misread_scene, "cost": zero}).status_code == 422
    outside = {**misread_scene["predictions"][0], "box": [1.5, 0.5, 0.2, 0.1]}
    assert client.post("/v1/match", json={**misread_scene, "predictions": [outside]}).status_code == 422


def test_eval(client):
    scene = {
        "scene_id": "s",
        "ground_truth": [{"box": GT_BOX, "text": "hello"}],
        "predictions": [{"score_text": 0.9, "box": [0.55, 0.5, 0.2, 0.1], "text": "hell0"}],
    }
    plain = client.post("/v1/eval", json={"scenes": [scene]})
    assert plain.status_code == 200, plain.text
    assert plain.json()["f_measure"] == 0.0

    corrected = client.post("/v1/eval", json={"scenes": [scene], "protocol": {"lexicon": ["hello", "world"]}})
    assert corrected.json()["f_measure"] == 1.0
    assert corrected.json()["scenes"] == [
        {"scene_id": "s", "true_positives": 1, "num_predictions": 1, "num_ground_truth": 1}
    ]


def test_eval_rejects_bad_protocol(client):
    response = client.post("/v1/eval", json={"scenes": [], "protocol": {"iou_threshold": 0.0}})
    assert response.status_code == 422
