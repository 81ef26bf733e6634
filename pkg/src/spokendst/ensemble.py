"""Prediction ensembling by per-slot majority vote.

Every input prediction set casts one vote per (dialogue, turn, slot): its
predicted value, or ABSENT when it does not predict the slot. The plurality
value wins; ABSENT wins any tie it is part of (letting the ensemble drop
hallucinated slots), and ties between values go to the lowest-indexed input
set, so callers should pass sets in decreasing order of trust.
"""

from __future__ import annotations

import logging
from collections import Counter

from .corpus import Prediction, PredictionSet

logger = logging.getLogger(__name__)

ABSENT = "<absent>"

VoteKey = tuple[str, int, str]


def tally_votes(sets: list[PredictionSet]) -> dict[VoteKey, Counter]:
    """Vote counts per (dialogue_id, turn_index, slot); every set votes on
    every slot any set named for the turn, ABSENT standing in for no value."""
    if not sets:
        raise ValueError("cannot tally votes over zero prediction sets")
    by_key = [s.to_dict() for s in sets]
    turn_keys: dict[tuple[str, int], None] = {}
    for states in by_key:
        for key in states:
            turn_keys.setdefault(key, None)

    all_keys = set(turn_keys)
    mismatched = [i for i, states in enumerate(by_key) if set(states) != all_keys]
    if mismatched:
        logger.warning(
            "prediction sets %s do not cover the full turn key space; "
            "their missing keys vote as empty states",
            mismatched,
        )

    tallies: dict[VoteKey, Counter] = {}
    for did, idx in turn_keys:
        slots: dict[str, None] = {}
        for states in by_key:
            for slot in states.get((did, idx), {}):
                slots.setdefault(slot, None)
        for slot in slots:
            votes = Counter(
                states.get((did, idx), {}).get(slot, ABSENT) for states in by_key
            )
            tallies[(did, idx, slot)] = votes
    return tallies


def majority_vote(sets: list[PredictionSet]) -> PredictionSet:
    """Combine prediction sets into one by per-slot plurality."""
    if not sets:
        raise ValueError("majority_vote requires at least one prediction set")
    by_key = [s.to_dict() for s in sets]
    tallies = tally_votes(sets)

    states: dict[tuple[str, int], dict[str, str]] = {}
    for states_map in by_key:
        for key in states_map:
            states.setdefault(key, {})

    for (did, idx, slot), votes in tallies.items():
        top = max(votes.values())
        winners = {value for value, count in votes.items() if count == top}
        if ABSENT in winners:
            continue
        if len(winners) == 1:
            (value,) = winners
        else:
            value = next(
                states_map[(did, idx)][slot]
                for states_map in by_key
                if states_map.get((did, idx), {}).get(slot, ABSENT) in winners
            )
        states[(did, idx)][slot] = value

    predictions = [
        Prediction(did, idx, dict(sorted(states[(did, idx)].items())))
        for did, idx in sorted(states)
    ]
    return PredictionSet(tuple(predictions))
