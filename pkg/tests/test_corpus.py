import json

import pytest
from hypothesis import given, strategies as st

from spokendst import (
    ValidationError,
    load_corpus,
    load_ontology,
    load_predictions,
    serialize_corpus,
    serialize_predictions,
)
from spokendst.corpus import normalize_value

from conftest import make_corpus


def test_minimal_corpus_loads():
    doc = make_corpus(
        [
            (
                "d1",
                [
                    ("user", "hi", {}),
                    ("agent", "hello"),
                    ("user", "hotel in north", {"hotel-area": "north"}),
                ],
            )
        ]
    )
    corpus = load_corpus(doc)
    assert len(corpus.dialogues) == 1
    assert len(corpus.dialogues[0].turns) == 3
    assert corpus.dialogues[0].turns[2].state == {"hotel-area": "north"}


def test_first_turn_must_be_user():
    doc = make_corpus([("d1", [("agent", "hello"), ("user", "hi", {})])])
    with pytest.raises(ValidationError, match="first turn must be user"):
        load_corpus(doc)


def test_values_normalized_at_ingestion():
    doc = make_corpus([("d1", [("user", "x", {"hotel-area": "  North "})])])
    corpus = load_corpus(doc)
    assert corpus.dialogues[0].turns[0].state == {"hotel-area": "north"}


def test_alternation_violation_names_turn():
    doc = make_corpus([("d1", [("user", "a", {}), ("user", "b", {})])])
    with pytest.raises(ValidationError, match="dialogue 'd1' turn 1"):
        load_corpus(doc)


def test_missing_state_on_user_turn():
    doc = json.dumps(
        {"dialogues": [{"dialogue_id": "d1", "turns": [{"speaker": "user", "text": "hi"}]}]}
    )
    with pytest.raises(ValidationError, match="missing state"):
        load_corpus(doc)


def test_duplicate_dialogue_id():
    doc = make_corpus([("d1", [("user", "a", {})]), ("d1", [("user", "b", {})])])
    with pytest.raises(ValidationError, match="duplicate dialogue_id"):
        load_corpus(doc)


def test_agent_final_turn_is_legal():
    doc = make_corpus([("d1", [("user", "hi", {}), ("agent", "bye")])])
    assert len(load_corpus(doc).dialogues[0].turns) == 2


def test_empty_user_text_rejected():
    doc = make_corpus([("d1", [("user", "  ", {})])])
    with pytest.raises(ValidationError, match="may not be empty"):
        load_corpus(doc)


def test_semicolon_value_rejected_with_diagnostic():
    doc = make_corpus([("d1", [("user", "x", {"hotel-name": "a;b"})])])
    with pytest.raises(ValidationError, match="';'"):
        load_corpus(doc)


def test_bad_slot_name_rejected():
    doc = make_corpus([("d1", [("user", "x", {"HotelArea": "north"})])])
    with pytest.raises(ValidationError, match="bad slot name"):
        load_corpus(doc)


def test_strict_mode_checks_slot_vocabulary(mini_ontology):
    doc = make_corpus([("d1", [("user", "x", {"hotel-area": "north"})])])
    load_corpus(doc)  # permissive: fine
    with pytest.raises(ValidationError, match="not declared"):
        load_corpus(doc, allowed_slots=mini_ontology.declared_slots())


def test_corpus_round_trip(fixture_corpus):
    assert load_corpus(serialize_corpus(fixture_corpus)) == fixture_corpus


@given(st.text())
def test_normalize_value_idempotent(value):
    once = normalize_value(value)
    assert normalize_value(once) == once


# --- ontology -------------------------------------------------------------


def test_minimal_ontology_loads():
    ontology = load_ontology(
        json.dumps(
            {
                "categories": {"town": ["norwich", "ely"]},
                "slot_to_category": {"train-departure": "town"},
                "time_slots": ["train-leaveat"],
            }
        )
    )
    assert ontology.categories["town"] == ("norwich", "ely")
    assert ontology.time_slots == ("train-leaveat",)


def test_dangling_category_reference():
    doc = json.dumps(
        {"categories": {"town": ["ely"]}, "slot_to_category": {"train-departure": "city"}}
    )
    with pytest.raises(ValidationError, match="unknown category"):
        load_ontology(doc)


def test_duplicate_surface_form():
    doc = json.dumps(
        {"categories": {"town": ["ely", "Ely"]}, "slot_to_category": {}}
    )
    with pytest.raises(ValidationError, match="duplicate surface"):
        load_ontology(doc)


def test_empty_category_rejected():
    doc = json.dumps({"categories": {"town": []}, "slot_to_category": {}})
    with pytest.raises(ValidationError, match="non-empty"):
        load_ontology(doc)


def test_time_slot_category_overlap_rejected():
    doc = json.dumps(
        {
            "categories": {"town": ["ely"]},
            "slot_to_category": {"train-leaveat": "town"},
            "time_slots": ["train-leaveat"],
        }
    )
    with pytest.raises(ValidationError, match="both a time slot"):
        load_ontology(doc)


# --- predictions ----------------------------------------------------------


def test_predictions_load_and_round_trip():
    doc = (
        '{"dialogue_id": "d1", "turn_index": 0, "state": {"hotel-area": "north"}}\n'
        '{"dialogue_id": "d1", "turn_index": 2, "state": {}}\n'
    )
    predictions = load_predictions(doc)
    assert len(predictions) == 2
    assert load_predictions(serialize_predictions(predictions)) == predictions


def test_duplicate_prediction_lists_line_numbers():
    doc = (
        '{"dialogue_id": "d1", "turn_index": 0, "state": {}}\n'
        '{"dialogue_id": "d1", "turn_index": 0, "state": {}}\n'
    )
    with pytest.raises(ValidationError, match="lines 1 and 2"):
        load_predictions(doc)


def test_empty_predictions_file():
    assert len(load_predictions("")) == 0


def test_malformed_prediction_line_reported():
    with pytest.raises(ValidationError, match="line 1"):
        load_predictions("not json\n")
