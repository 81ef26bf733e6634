"""Deterministic mock dialogue state predictor.

Scans the linearized context for ontology surface forms and canonical time
patterns, assigns each hit to a slot via the slot-to-category map plus a
small cue-word heuristic ("from"/"leaving" pick departure-style slots,
"to"/"arriving" destination-style), and accumulates over the whole context
so the response is always the full state from scratch. Intentionally weak:
it exists to exercise the protocol and the pipeline, not to track states
well. Identical contexts always produce identical states.
"""

from __future__ import annotations

import re

from .ontology import Ontology

TIME_RE = re.compile(r"(?<![\w:])(?:1[0-2]|[1-9]):[0-5][0-9] (?:am|pm)(?!\w)")

_DEPARTURE_CUES = {"from", "leaving"}
_DESTINATION_CUES = {"to", "arriving"}
_CUE_WINDOW = 2  # words looked at before a hit


class MockDst:
    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        self._patterns = [
            (surface, category, re.compile(rf"(?<!\w){re.escape(surface)}(?!\w)", re.IGNORECASE))
            for category, surfaces in ontology.categories.items()
            for surface in surfaces
        ]
        # longest surface first so "cambridge lodge" beats "cambridge"
        self._patterns.sort(key=lambda item: (-len(item[0]), item[0]))

    def _cue_before(self, text: str, start: int) -> str | None:
        words = text[:start].lower().split()
        for word in reversed(words[-_CUE_WINDOW:]):
            word = word.strip(".,!?;:")
            if word in _DEPARTURE_CUES or word in _DESTINATION_CUES:
                return word
        return None

    def _entity_slot(self, category: str, cue: str | None) -> str | None:
        slots = self.ontology.slots_for_category(category)
        if not slots:
            return None
        if cue in _DEPARTURE_CUES:
            for slot in slots:
                if "departure" in slot:
                    return slot
        if cue in _DESTINATION_CUES:
            for slot in slots:
                if "destination" in slot:
                    return slot
        return slots[0]

    def _time_slot(self, cue_text: str) -> str | None:
        slots = sorted(self.ontology.time_slots)
        if not slots:
            return None
        if "leaving" in cue_text or "leave" in cue_text:
            for slot in slots:
                if "leave" in slot:
                    return slot
        if "arriving" in cue_text or "arrive" in cue_text:
            for slot in slots:
                if "arrive" in slot:
                    return slot
        return slots[0]

    def predict(self, context: str) -> str:
        """Linearized state ("slot=value; ..." with slots sorted) for a context."""
        state: dict[str, str] = {}

        claimed: list[tuple[int, int]] = []
        hits: list[tuple[int, str, str]] = []
        for surface, category, pattern in self._patterns:
            for m in pattern.finditer(context):
                if any(s < m.end() and m.start() < e for s, e in claimed):
                    continue
                claimed.append((m.start(), m.end()))
                hits.append((m.start(), surface, category))
        for start, surface, category in sorted(hits):
            slot = self._entity_slot(category, self._cue_before(context, start))
            if slot:
                state[slot] = surface

        for m in TIME_RE.finditer(context):
            window = " ".join(context[: m.start()].lower().split()[-_CUE_WINDOW:])
            slot = self._time_slot(window)
            if slot:
                state[slot] = m.group()

        return "; ".join(f"{slot}={state[slot]}" for slot in sorted(state))
