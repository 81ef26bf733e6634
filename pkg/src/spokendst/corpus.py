"""Dialogue corpus data model: dialogues, states, ontologies and predictions.

A dialogue state is a plain ``dict`` mapping slot names ("<domain>-<slot>",
e.g. "hotel-name") to string values. Values are normalized at ingestion:
lowercased with internal whitespace collapsed to single spaces. All container
types are frozen dataclasses and must be treated as immutable after
construction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

SPEAKER_USER = "user"
SPEAKER_AGENT = "agent"

SLOT_NAME_RE = re.compile(r"^[a-z]+-[a-z-]+$")


class ValidationError(ValueError):
    """Raised when a corpus, ontology or predictions document is malformed."""


def normalize_value(value: str) -> str:
    """Lowercase and collapse whitespace; idempotent."""
    return " ".join(value.lower().split())


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str
    state: dict[str, str] | None = None

    @property
    def is_user(self) -> bool:
        return self.speaker == SPEAKER_USER


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    turns: tuple[Turn, ...]

    def user_turn_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.turns) if t.is_user]


@dataclass(frozen=True)
class Corpus:
    dialogues: tuple[Dialogue, ...]

    def get(self, dialogue_id: str) -> Dialogue:
        for d in self.dialogues:
            if d.dialogue_id == dialogue_id:
                return d
        raise KeyError(dialogue_id)

    def num_user_turns(self) -> int:
        return sum(len(d.user_turn_indices()) for d in self.dialogues)


@dataclass(frozen=True)
class Ontology:
    categories: dict[str, tuple[str, ...]]
    slot_to_category: dict[str, str]
    time_slots: tuple[str, ...]

    def surfaces(self) -> list[str]:
        """All surface forms across categories, in file order."""
        out: list[str] = []
        for forms in self.categories.values():
            out.extend(forms)
        return out

    def declared_slots(self) -> set[str]:
        return set(self.slot_to_category) | set(self.time_slots)


@dataclass(frozen=True)
class Prediction:
    dialogue_id: str
    turn_index: int
    state: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class PredictionSet:
    predictions: tuple[Prediction, ...]

    def to_dict(self) -> dict[tuple[str, int], dict[str, str]]:
        return {(p.dialogue_id, p.turn_index): p.state for p in self.predictions}

    def __len__(self) -> int:
        return len(self.predictions)


def iter_user_turns(corpus: Corpus) -> Iterator[tuple[Dialogue, int, Turn]]:
    """Yield (dialogue, turn_index, turn) for every user turn, in corpus order."""
    for dialogue in corpus.dialogues:
        for i, turn in enumerate(dialogue.turns):
            if turn.is_user:
                yield dialogue, i, turn


def _validate_state(
    raw: object,
    where: str,
    allowed_slots: set[str] | None,
) -> dict[str, str]:
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: state must be an object")
    state: dict[str, str] = {}
    for slot, value in raw.items():
        if not isinstance(slot, str) or not SLOT_NAME_RE.match(slot):
            raise ValidationError(f"{where}: bad slot name {slot!r}")
        if allowed_slots is not None and slot not in allowed_slots:
            raise ValidationError(f"{where}: slot {slot!r} not declared in ontology")
        if not isinstance(value, str):
            raise ValidationError(f"{where}: value for {slot!r} must be a string")
        norm = normalize_value(value)
        if not norm:
            raise ValidationError(f"{where}: empty value for slot {slot!r}")
        if ";" in norm:
            raise ValidationError(
                f"{where}: value for {slot!r} contains ';' and cannot be linearized"
            )
        state[slot] = norm
    return state


def load_corpus(document: str, allowed_slots: Iterable[str] | None = None) -> Corpus:
    """Parse and validate a corpus JSON document.

    ``allowed_slots`` enables strict slot-vocabulary checking; by default any
    well-formed slot name is accepted. Raises :class:`ValidationError` with
    the offending dialogue id and turn index on any violation.
    """
    allowed = set(allowed_slots) if allowed_slots is not None else None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed corpus JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("dialogues"), list):
        raise ValidationError("corpus document must be an object with a 'dialogues' list")

    dialogues: list[Dialogue] = []
    seen_ids: set[str] = set()
    for d_pos, raw_dialogue in enumerate(doc["dialogues"]):
        if not isinstance(raw_dialogue, dict):
            raise ValidationError(f"dialogue #{d_pos}: not an object")
        did = raw_dialogue.get("dialogue_id")
        if not isinstance(did, str) or not did:
            raise ValidationError(f"dialogue #{d_pos}: missing dialogue_id")
        if did in seen_ids:
            raise ValidationError(f"duplicate dialogue_id {did!r}")
        seen_ids.add(did)
        raw_turns = raw_dialogue.get("turns")
        if not isinstance(raw_turns, list) or not raw_turns:
            raise ValidationError(f"dialogue {did!r}: must contain at least one turn")

        turns: list[Turn] = []
        for i, raw_turn in enumerate(raw_turns):
            where = f"dialogue {did!r} turn {i}"
            if not isinstance(raw_turn, dict):
                raise ValidationError(f"{where}: not an object")
            speaker = raw_turn.get("speaker")
            if speaker not in (SPEAKER_USER, SPEAKER_AGENT):
                raise ValidationError(f"{where}: speaker must be 'user' or 'agent'")
            if i == 0 and speaker != SPEAKER_USER:
                raise ValidationError(f"dialogue {did!r} turn 0: first turn must be user")
            if i > 0 and speaker == turns[-1].speaker:
                raise ValidationError(f"{where}: speakers must alternate")
            text = raw_turn.get("text")
            if not isinstance(text, str):
                raise ValidationError(f"{where}: text must be a string")
            if speaker == SPEAKER_USER and not text.strip():
                raise ValidationError(f"{where}: user turn text may not be empty")
            if speaker == SPEAKER_USER:
                if "state" not in raw_turn:
                    raise ValidationError(f"{where}: user turn missing state")
                state = _validate_state(raw_turn["state"], where, allowed)
                turns.append(Turn(speaker, text, state))
            else:
                if "state" in raw_turn:
                    raise ValidationError(f"{where}: agent turn must not carry a state")
                turns.append(Turn(speaker, text, None))
        dialogues.append(Dialogue(did, tuple(turns)))
    return Corpus(tuple(dialogues))


def corpus_to_obj(corpus: Corpus) -> dict:
    return {
        "dialogues": [
            {
                "dialogue_id": d.dialogue_id,
                "turns": [
                    {"speaker": t.speaker, "text": t.text, "state": t.state}
                    if t.is_user
                    else {"speaker": t.speaker, "text": t.text}
                    for t in d.turns
                ],
            }
            for d in corpus.dialogues
        ]
    }


def serialize_corpus(corpus: Corpus) -> str:
    """Inverse of :func:`load_corpus`: load_corpus(serialize_corpus(c)) == c."""
    return json.dumps(corpus_to_obj(corpus), ensure_ascii=False, indent=2) + "\n"


def load_ontology(document: str) -> Ontology:
    """Parse and validate an ontology JSON document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed ontology JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("ontology document must be an object")
    raw_categories = doc.get("categories")
    raw_slot_map = doc.get("slot_to_category")
    raw_time_slots = doc.get("time_slots", [])
    if not isinstance(raw_categories, dict) or not isinstance(raw_slot_map, dict):
        raise ValidationError("ontology must define 'categories' and 'slot_to_category'")
    if not isinstance(raw_time_slots, list):
        raise ValidationError("'time_slots' must be a list")

    categories: dict[str, tuple[str, ...]] = {}
    for name, forms in raw_categories.items():
        if not isinstance(forms, list) or not forms:
            raise ValidationError(f"category {name!r}: must be a non-empty list")
        seen: set[str] = set()
        normed: list[str] = []
        for form in forms:
            if not isinstance(form, str):
                raise ValidationError(f"category {name!r}: surface forms must be strings")
            norm = normalize_value(form)
            if not norm:
                raise ValidationError(f"category {name!r}: empty surface form")
            if norm in seen:
                raise ValidationError(f"category {name!r}: duplicate surface form {norm!r}")
            seen.add(norm)
            normed.append(norm)
        categories[name] = tuple(normed)

    slot_to_category: dict[str, str] = {}
    for slot, category in raw_slot_map.items():
        if not isinstance(slot, str) or not SLOT_NAME_RE.match(slot):
            raise ValidationError(f"slot_to_category: bad slot name {slot!r}")
        if category not in categories:
            raise ValidationError(
                f"slot {slot!r} references unknown category {category!r}"
            )
        slot_to_category[slot] = category

    time_slots: list[str] = []
    for slot in raw_time_slots:
        if not isinstance(slot, str) or not SLOT_NAME_RE.match(slot):
            raise ValidationError(f"time_slots: bad slot name {slot!r}")
        if slot in slot_to_category:
            raise ValidationError(
                f"slot {slot!r} cannot be both a time slot and a category slot"
            )
        if slot in time_slots:
            raise ValidationError(f"time_slots: duplicate slot {slot!r}")
        time_slots.append(slot)

    return Ontology(categories, slot_to_category, tuple(time_slots))


def load_predictions(document: str) -> PredictionSet:
    """Parse a JSON Lines predictions document; blank lines are ignored."""
    predictions: list[Prediction] = []
    seen: dict[tuple[str, int], int] = {}
    for lineno, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: malformed JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ValidationError(f"line {lineno}: record must be an object")
        did = record.get("dialogue_id")
        idx = record.get("turn_index")
        if not isinstance(did, str) or not did:
            raise ValidationError(f"line {lineno}: missing dialogue_id")
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise ValidationError(f"line {lineno}: turn_index must be a non-negative int")
        key = (did, idx)
        if key in seen:
            raise ValidationError(
                f"duplicate prediction for {key}: lines {seen[key]} and {lineno}"
            )
        seen[key] = lineno
        state = _validate_state(
            record.get("state", {}), f"line {lineno}", allowed_slots=None
        )
        predictions.append(Prediction(did, idx, state))
    return PredictionSet(tuple(predictions))


def serialize_predictions(prediction_set: PredictionSet) -> str:
    """One JSON record per line, in set order."""
    lines = [
        json.dumps(
            {"dialogue_id": p.dialogue_id, "turn_index": p.turn_index, "state": p.state},
            ensure_ascii=False,
        )
        for p in prediction_set.predictions
    ]
    return "\n".join(lines) + ("\n" if lines else "")
