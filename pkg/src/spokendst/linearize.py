"""Dialogue history and state linearization.

The DST model input is the full history up to a user turn, each utterance
prefixed with "user:" or "agent:". States are rendered as a semicolon-
separated list of "slot=value" strings; parsing the model's output back is
maximally tolerant because generative models produce arbitrary text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import SLOT_NAME_RE, Corpus, Dialogue, iter_user_turns, normalize_value


@dataclass(frozen=True)
class DstInput:
    text: str
    dialogue_id: str
    turn_index: int


def build_dst_input(dialogue: Dialogue, turn_index: int) -> DstInput:
    """Linearize the history up to and including the user turn at
    ``turn_index``, prepending the "user:"/"agent:" delimiters."""
    if not 0 <= turn_index < len(dialogue.turns):
        raise IndexError(
            f"dialogue {dialogue.dialogue_id!r}: turn index {turn_index} out of range"
        )
    if not dialogue.turns[turn_index].is_user:
        raise ValueError(
            f"dialogue {dialogue.dialogue_id!r}: turn {turn_index} is not a user turn"
        )
    parts = []
    for turn in dialogue.turns[: turn_index + 1]:
        parts.append(f"{turn.speaker}: {turn.text}" if turn.text else f"{turn.speaker}:")
    return DstInput(" ".join(parts), dialogue.dialogue_id, turn_index)


def serialize_state(state: dict[str, str]) -> str:
    """Render "slot=value" pairs joined by "; ", slots in lexicographic order."""
    return "; ".join(f"{slot}={state[slot]}" for slot in sorted(state))


def parse_state(text: str) -> tuple[dict[str, str], int]:
    """Parse a linearized state, dropping (and counting) malformed fragments.

    Fragments are split on ';' and each on its first '='; a fragment survives
    only if it yields a well-formed slot name and a non-empty value. Later
    duplicates of a slot overwrite earlier ones. Total function: never raises.
    """
    state: dict[str, str] = {}
    dropped = 0
    for fragment in text.split(";"):
        fragment = fragment.strip()
        if not fragment:
            continue
        slot, eq, value = fragment.partition("=")
        slot = slot.strip().lower()
        value = normalize_value(value)
        if not eq or not SLOT_NAME_RE.match(slot) or not value:
            dropped += 1
            continue
        state[slot] = value
    return state, dropped


def dst_inputs(corpus: Corpus) -> list[DstInput]:
    """One DST input per user turn, in corpus order."""
    return [
        build_dst_input(dialogue, i) for dialogue, i, _ in iter_user_turns(corpus)
    ]


def serialize_dst_inputs(inputs: list[DstInput]) -> str:
    """JSON Lines export consumed by prediction backends."""
    lines = [
        json.dumps(
            {"dialogue_id": d.dialogue_id, "turn_index": d.turn_index, "context": d.text},
            ensure_ascii=False,
        )
        for d in inputs
    ]
    return "\n".join(lines) + ("\n" if lines else "")
