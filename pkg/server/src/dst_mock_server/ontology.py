"""Minimal reader for the pipeline's ontology file format.

The server deliberately re-implements this small reader instead of importing
the pipeline package: the JSON schema (categories, slot_to_category,
time_slots) is the integration contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Ontology:
    categories: dict[str, tuple[str, ...]]
    slot_to_category: dict[str, str]
    time_slots: tuple[str, ...]

    def slots_for_category(self, category: str) -> list[str]:
        return sorted(
            slot for slot, cat in self.slot_to_category.items() if cat == category
        )


def load_ontology(path: str) -> Ontology:
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    categories = {
        name: tuple(" ".join(s.lower().split()) for s in forms)
        for name, forms in doc["categories"].items()
    }
    slot_to_category = dict(doc["slot_to_category"])
    for slot, category in slot_to_category.items():
        if category not in categories:
            raise ValueError(f"slot {slot!r} references unknown category {category!r}")
    return Ontology(categories, slot_to_category, tuple(doc.get("time_slots", [])))
