"""Proper noun correction for user transcripts.

ASR frequently garbles named entities that the agent side spells correctly.
This module extracts entity mentions from turns, scores user/agent mention
pairs with character error rate (CER), and rewrites a user mention to the
closest agent mention whenever that CER is at or below a threshold.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace

from .corpus import (
    SPEAKER_AGENT,
    Dialogue,
    Turn,
    ValidationError,
    normalize_value,
)
from .editdist import levenshtein

SCOPE_HISTORY = "history"
SCOPE_FULL_DIALOGUE = "full-dialogue"

NER_HEURISTIC = "heuristic"
NER_ANNOTATIONS = "annotations-file"


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class NounCorrectorConfig:
    delta: float = 0.3
    scope: str = SCOPE_HISTORY
    ner: str = NER_HEURISTIC

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if self.scope not in (SCOPE_HISTORY, SCOPE_FULL_DIALOGUE):
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.ner not in (NER_HEURISTIC, NER_ANNOTATIONS):
            raise ValueError(f"unknown ner mode {self.ner!r}")


def cer(hyp: str, ref: str) -> float:
    """Character error rate: edit distance over the reference length.

    Both strings are lowercased and whitespace-collapsed before comparison.
    """
    ref_norm = normalize_value(ref)
    if not ref_norm:
        raise ValueError("undefined CER: empty reference")
    hyp_norm = normalize_value(hyp)
    return levenshtein(hyp_norm, ref_norm) / len(ref_norm)


_TOKEN_RE = re.compile(r"[^\s]+")


def _sentence_initial_offsets(text: str) -> set[int]:
    """Offsets of tokens that open the text or follow sentence punctuation."""
    offsets: set[int] = set()
    for m in _TOKEN_RE.finditer(text):
        before = text[: m.start()].rstrip()
        if not before or before[-1] in ".!?":
            offsets.add(m.start())
    return offsets


def _heuristic_spans(text: str) -> list[EntitySpan]:
    sentence_starts = _sentence_initial_offsets(text)
    tokens = list(_TOKEN_RE.finditer(text))
    spans: list[EntitySpan] = []
    run: list[re.Match[str]] = []

    def flush() -> None:
        if not run:
            return
        if len(run) == 1 and run[0].start() in sentence_starts:
            return
        start, end = run[0].start(), run[-1].end()
        spans.append(EntitySpan(start, end, text[start:end]))

    for tok in tokens:
        word = tok.group().strip("\"'.,!?;:()")
        capitalized = bool(word) and word[0].isalpha() and word[0].isupper()
        if capitalized and (not run or text[run[-1].end() : tok.start()].isspace()):
            run.append(tok)
        else:
            flush()
            run = [tok] if capitalized else []
    flush()

    # strip punctuation hanging off span edges
    trimmed: list[EntitySpan] = []
    for span in spans:
        start, end = span.start, span.end
        while end > start and text[end - 1] in "\"'.,!?;:()":
            end -= 1
        while start < end and text[start] in "\"'.,!?;:()":
            start += 1
        if start < end:
            trimmed.append(EntitySpan(start, end, text[start:end]))
    return trimmed


def extract_proper_nouns(
    turn_text: str, gazetteer: list[str] | None = None
) -> list[EntitySpan]:
    """Entity mention spans: gazetteer hits plus capitalization heuristics.

    Gazetteer entries match case-insensitively on word boundaries, longest
    entry first; heuristic spans are maximal runs of capitalized tokens,
    skipping a lone sentence-initial capital. Overlapping heuristic spans are
    dropped in favor of gazetteer hits.
    """
    spans: list[EntitySpan] = []
    if gazetteer:
        for entry in sorted(set(gazetteer), key=len, reverse=True):
            if not entry.strip():
                continue
            pattern = re.compile(rf"\b{re.escape(entry)}\b", re.IGNORECASE)
            for m in pattern.finditer(turn_text):
                if not _overlaps(m.start(), m.end(), spans):
                    spans.append(EntitySpan(m.start(), m.end(), m.group()))
    for span in _heuristic_spans(turn_text):
        if span.start < span.end and not _overlaps(span.start, span.end, spans):
            spans.append(span)
    return sorted(spans, key=lambda s: s.start)


def _overlaps(start: int, end: int, spans: list[EntitySpan]) -> bool:
    return any(s.start < end and start < s.end for s in spans)


def correct_nouns(
    user_turn: str,
    agent_nouns: list[str],
    config: NounCorrectorConfig,
    user_spans: list[EntitySpan] | None = None,
) -> tuple[str, list[tuple[str, str]]]:
    """Rewrite user entity mentions to their closest agent-side mention.

    For each user mention the lowest-CER agent noun is selected (earliest
    mention breaks ties); the span is rewritten only when 0 < CER <= delta,
    so exact matches are no-ops and delta = 0 is the identity. Returns the
    rewritten text and a log of (original, replacement) pairs.
    """
    agent_nouns = [a for a in agent_nouns if normalize_value(a)]
    if not agent_nouns:
        return user_turn, []
    if user_spans is None:
        user_spans = extract_proper_nouns(user_turn)

    edits: list[tuple[EntitySpan, str]] = []
    log: list[tuple[str, str]] = []
    for span in user_spans:
        scored = [(cer(span.surface, agent), i) for i, agent in enumerate(agent_nouns)]
        best_cer, best_idx = min(scored)
        if 0.0 < best_cer <= config.delta:
            replacement = agent_nouns[best_idx]
            edits.append((span, replacement))
            log.append((span.surface, replacement))

    text = user_turn
    for span, replacement in sorted(edits, key=lambda e: e[0].start, reverse=True):
        text = text[: span.start] + replacement + text[span.end :]
    return text, log


def load_entity_annotations(document: str) -> dict[tuple[str, int], list[tuple[int, int]]]:
    """Parse a JSON Lines entity-annotations document into per-turn offsets."""
    annotations: dict[tuple[str, int], list[tuple[int, int]]] = {}
    for lineno, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: malformed JSON: {exc}") from exc
        try:
            key = (record["dialogue_id"], int(record["turn_index"]))
            spans = [(int(e["start"]), int(e["end"])) for e in record["entities"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"line {lineno}: bad annotation record: {exc}") from exc
        annotations[key] = spans
    return annotations


def _turn_spans(
    dialogue_id: str,
    turn_index: int,
    text: str,
    config: NounCorrectorConfig,
    annotations: dict[tuple[str, int], list[tuple[int, int]]] | None,
) -> list[EntitySpan]:
    if config.ner == NER_ANNOTATIONS:
        offsets = (annotations or {}).get((dialogue_id, turn_index), [])
        return [EntitySpan(s, e, text[s:e]) for s, e in offsets if 0 <= s < e <= len(text)]
    return extract_proper_nouns(text)


def correct_dialogue(
    dialogue: Dialogue,
    config: NounCorrectorConfig,
    annotations: dict[tuple[str, int], list[tuple[int, int]]] | None = None,
) -> tuple[Dialogue, list[dict]]:
    """Apply noun correction to every user turn of a dialogue.

    Agent mentions are collected from agent turns preceding each user turn
    (or from the whole dialogue under the full-dialogue scope), deduplicated
    case-insensitively in first-mention order. Gold states are untouched.
    """
    agent_mentions: list[tuple[int, str]] = []
    for i, turn in enumerate(dialogue.turns):
        if turn.speaker == SPEAKER_AGENT:
            for span in _turn_spans(dialogue.dialogue_id, i, turn.text, config, annotations):
                agent_mentions.append((i, span.surface))

    new_turns: list[Turn] = []
    log: list[dict] = []
    for i, turn in enumerate(dialogue.turns):
        if not turn.is_user:
            new_turns.append(turn)
            continue
        if config.scope == SCOPE_HISTORY:
            visible = [s for j, s in agent_mentions if j < i]
        else:
            visible = [s for _, s in agent_mentions]
        nouns: list[str] = []
        seen: set[str] = set()
        for surface in visible:
            key = normalize_value(surface)
            if key not in seen:
                seen.add(key)
                nouns.append(surface)
        spans = _turn_spans(dialogue.dialogue_id, i, turn.text, config, annotations)
        text, edits = correct_nouns(turn.text, nouns, config, user_spans=spans)
        new_turns.append(replace(turn, text=text))
        for original, replacement in edits:
            log.append(
                {
                    "turn_index": i,
                    "kind": "noun",
                    "original": original,
                    "replacement": replacement,
                }
            )
    return Dialogue(dialogue.dialogue_id, tuple(new_turns)), log
