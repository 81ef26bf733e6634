"""Golden request/response suite for the mock server."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from dst_mock_server import create_app

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


@pytest.fixture(scope="module")
def client():
    app = create_app(ontology_path=str(FIXTURES / "ontology.json"))
    return TestClient(app, raise_server_exceptions=False)


def predict(client, context, dialogue_id="d1", turn_index=0):
    response = client.post(
        "/v1/predict_state",
        json={"dialogue_id": dialogue_id, "turn_index": turn_index, "context": context},
    )
    assert response.status_code == 200, response.text
    return response.json()


def test_single_gazetteer_hit(client):
    body = predict(client, "user: i want to eat at willow house")
    assert body == {"state": "restaurant-name=willow house"}


def test_cue_words_resolve_departure_and_destination(client):
    body = predict(client, "user: a train from norwich to ely")
    assert body == {"state": "train-departure=norwich; train-destination=ely"}


def test_no_hits_gives_empty_state(client):
    body = predict(client, "user: nothing relevant here")
    assert body == {"state": ""}


def test_longest_surface_wins(client):
    body = predict(client, "user: book the cambridge lodge")
    assert body["state"] == "restaurant-name=cambridge lodge"


def test_time_pattern_with_cue(client):
    body = predict(client, "user: i want to leave at 9:15 am and arrive by 10:45 am")
    state = dict(fragment.split("=", 1) for fragment in body["state"].split("; "))
    assert state["train-leaveat"] == "9:15 am"
    assert state["train-arriveat"] == "10:45 am"


def test_accumulates_across_whole_context(client):
    context = (
        "user: i need a train from norwich agent: where to? "
        "user: to ely, and book the willow house"
    )
    state = dict(fragment.split("=", 1) for fragment in predict(client, context)["state"].split("; "))
    assert state == {
        "train-departure": "norwich",
        "train-destination": "ely",
        "restaurant-name": "willow house",
    }


def test_determinism(client):
    context = "user: a train from norwich to ely leaving at 9:15 am"
    assert predict(client, context) == predict(client, context)


def test_health(client):
    response = client.get("/v1/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_unknown_path_is_404(client):
    assert client.get("/v1/nothing").status_code == 404


def test_wrong_method_is_405(client):
    assert client.post("/v1/health").status_code == 405
    assert client.get("/v1/predict_state").status_code == 405


def test_malformed_body_is_400(client):
    response = client.post("/v1/predict_state", json={"dialogue_id": "d1"})
    assert response.status_code == 400
    assert "error" in response.json()
    response = client.post(
        "/v1/predict_state",
        content=b"not json",
        headers={"Content-Type": "application/json"},
    )
    assert response.status_code == 400
