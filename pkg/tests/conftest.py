import json
from pathlib import Path

import pytest

from spokendst import load_corpus, load_ontology

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def make_corpus(dialogues) -> str:
    """Corpus JSON document from [(dialogue_id, [(speaker, text, state?), ...])]."""
    out = []
    for dialogue_id, turns in dialogues:
        rendered = []
        for turn in turns:
            speaker, text = turn[0], turn[1]
            record = {"speaker": speaker, "text": text}
            if speaker == "user":
                record["state"] = turn[2] if len(turn) > 2 else {}
            rendered.append(record)
        out.append({"dialogue_id": dialogue_id, "turns": rendered})
    return json.dumps({"dialogues": out})


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus((FIXTURES / "corpus.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def fixture_ontology():
    return load_ontology((FIXTURES / "ontology.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def mini_ontology():
    return load_ontology(
        json.dumps(
            {
                "categories": {
                    "town": ["norwich", "ely"],
                    "restaurant": ["willow house"],
                },
                "slot_to_category": {
                    "train-departure": "town",
                    "train-destination": "town",
                    "restaurant-name": "restaurant",
                },
                "time_slots": ["train-leaveat"],
            }
        )
    )
