"""Spoken-style time expression normalization.

Rewrites clock expressions found in transcripts ("quarter past 10 am",
"5 o' 8 am", "midnight", "seven pm") into the canonical
"[hour]:[minutes] [am|pm]" rendering: hour 1-12 unpadded, minute
zero-padded, lowercase meridiem. Expressions without an explicit meridiem
marker (and no noon/midnight anchor) are deliberately left untouched.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import NamedTuple

CANONICAL_RE = re.compile(r"^([1-9]|1[0-2]):[0-5][0-9] (am|pm)$")

_UNIT_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9,
}
_TEEN_WORDS = {
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19,
}
_TENS_WORDS = {"twenty": 20, "thirty": 30, "forty": 40, "fifty": 50}

_HOUR_WORDS = {w: n for w, n in {**_UNIT_WORDS, **_TEEN_WORDS}.items() if n <= 12}


def _alternation(words: dict[str, int]) -> str:
    return "|".join(sorted(words, key=len, reverse=True))


_UNIT_ALT = _alternation(_UNIT_WORDS)
_TENS_ALT = _alternation(_TENS_WORDS)
_TEEN_ALT = _alternation(_TEEN_WORDS)
_HOUR_WORD_ALT = _alternation(_HOUR_WORDS)

# "twenty five" / "twenty-five" / "fifteen" / "seven" / "zero"
_MINUTE_WORD = rf"(?:(?:{_TENS_ALT})(?:[ -](?:{_UNIT_ALT}))?|{_TEEN_ALT}|{_UNIT_ALT}|zero)"
_HOUR = rf"(?:1[0-2]|0?[1-9]|{_HOUR_WORD_ALT})"
_MINUTE_NUM = r"(?:[1-5][0-9]|0?[1-9])"
_MERIDIEM = r"(?:[ap]\.m\.|[ap]m\b)"

_RULES: list[tuple[str, re.Pattern[str]]] = [
    (
        "canonical",
        re.compile(
            rf"\b(?P<hour>1[0-2]|0?[1-9]):(?P<minute>[0-5][0-9])\s*(?P<mer>{_MERIDIEM})",
            re.IGNORECASE,
        ),
    ),
    (
        "oh-filler",
        re.compile(
            rf"\b(?P<hour>{_HOUR})\s+(?:o'|oh)\s*(?P<minute>[0-9]|{_UNIT_ALT}|zero)\s+(?P<mer>{_MERIDIEM})",
            re.IGNORECASE,
        ),
    ),
    (
        "quarter",
        re.compile(
            rf"\b(?:a\s+)?quarter\s+(?P<dir>past|to)\s+(?P<hour>{_HOUR})\s+(?P<mer>{_MERIDIEM})",
            re.IGNORECASE,
        ),
    ),
    (
        "half-past",
        re.compile(
            rf"\bhalf\s+past\s+(?P<hour>{_HOUR})\s+(?P<mer>{_MERIDIEM})",
            re.IGNORECASE,
        ),
    ),
    (
        "minutes-past-to",
        re.compile(
            rf"\b(?P<minute>{_MINUTE_NUM}|{_MINUTE_WORD})\s+(?:minutes?\s+)?(?P<dir>past|to)\s+"
            rf"(?P<hour>{_HOUR})\s+(?P<mer>{_MERIDIEM})",
            re.IGNORECASE,
        ),
    ),
    (
        "noon-midnight",
        re.compile(r"\b(?:(?:12|twelve)\s+)?(?P<word>noon|midnight)\b", re.IGNORECASE),
    ),
    (
        "bare-hour",
        re.compile(rf"\b(?P<hour>{_HOUR})\s+(?P<mer>{_MERIDIEM})", re.IGNORECASE),
    ),
]


@dataclass(frozen=True)
class CanonicalTime:
    hour: int
    minute: int
    meridiem: str

    def __post_init__(self) -> None:
        if not (1 <= self.hour <= 12 and 0 <= self.minute <= 59):
            raise ValueError(f"invalid clock time {self.hour}:{self.minute}")
        if self.meridiem not in ("am", "pm"):
            raise ValueError(f"invalid meridiem {self.meridiem!r}")

    def render(self) -> str:
        return f"{self.hour}:{self.minute:02d} {self.meridiem}"

    def to_minutes(self) -> int:
        """Minutes since midnight; 12 am maps to 0, 12 pm to 720."""
        base = 0 if self.meridiem == "am" else 720
        return base + (self.hour % 12) * 60 + self.minute

    @classmethod
    def from_minutes(cls, total: int) -> "CanonicalTime":
        total %= 24 * 60
        meridiem = "am" if total < 720 else "pm"
        hour = (total // 60) % 12 or 12
        return cls(hour, total % 60, meridiem)


@dataclass(frozen=True)
class TimeMatch:
    start: int
    end: int
    parsed: CanonicalTime
    pattern_id: str

    def render(self) -> str:
        return self.parsed.render()


class NormalizedText(NamedTuple):
    text: str
    rewrites: int


def _word_to_int(token: str) -> int:
    token = token.lower().replace("-", " ")
    if token.isdigit():
        return int(token)
    parts = token.split()
    if len(parts) == 2:
        return _TENS_WORDS[parts[0]] + _UNIT_WORDS[parts[1]]
    word = parts[0]
    if word == "zero":
        return 0
    for table in (_UNIT_WORDS, _TEEN_WORDS, _TENS_WORDS):
        if word in table:
            return table[word]
    raise ValueError(f"not a number word: {token!r}")


def _meridiem(raw: str) -> str:
    return "am" if raw.lower().lstrip().startswith("a") else "pm"


def _parse(pattern_id: str, m: re.Match[str]) -> CanonicalTime:
    if pattern_id == "noon-midnight":
        return CanonicalTime(12, 0, "pm" if m.group("word").lower() == "noon" else "am")
    mer = _meridiem(m.group("mer"))
    hour = _word_to_int(m.group("hour"))
    if pattern_id == "canonical":
        return CanonicalTime(hour, int(m.group("minute")), mer)
    if pattern_id == "oh-filler":
        return CanonicalTime(hour, _word_to_int(m.group("minute")), mer)
    if pattern_id == "bare-hour":
        return CanonicalTime(hour, 0, mer)
    if pattern_id == "half-past":
        return CanonicalTime(hour, 30, mer)
    # "quarter past/to" and "N (minutes) past/to H": offset from the full hour,
    # re-deriving the meridiem through noon/midnight when "to" crosses it.
    offset = 15 if pattern_id == "quarter" else _word_to_int(m.group("minute"))
    anchor = CanonicalTime(hour, 0, mer).to_minutes()
    if m.group("dir").lower() == "past":
        return CanonicalTime.from_minutes(anchor + offset)
    return CanonicalTime.from_minutes(anchor - offset)


def load_supplementary_rules(document: str) -> list[tuple[str, re.Pattern[str]]]:
    """Parse a supplementary-rules JSON document: regex pattern -> rule id.

    Each pattern is interpreted by the parser of the named built-in rule, so
    it must define the same named groups (e.g. ``hour``/``mer`` for
    "bare-hour"). Supplementary rules rank below the built-ins on ties.
    """
    doc = json.loads(document)
    if not isinstance(doc, dict):
        raise ValueError("supplementary rules document must map pattern -> rule id")
    known = {pattern_id for pattern_id, _ in _RULES}
    rules: list[tuple[str, re.Pattern[str]]] = []
    for pattern, rule_id in doc.items():
        if rule_id not in known:
            raise ValueError(f"unknown rule id {rule_id!r} for pattern {pattern!r}")
        rules.append((rule_id, re.compile(pattern, re.IGNORECASE)))
    return rules


def find_time_expressions(
    text: str, extra_rules: list[tuple[str, re.Pattern[str]]] | None = None
) -> list[TimeMatch]:
    """All maximal non-overlapping time expressions, left to right.

    On overlap the leftmost match wins; among matches starting at the same
    position the longest wins, then earlier grammar rules.
    """
    rules = _RULES + list(extra_rules or [])
    candidates: list[tuple[int, int, int, str, re.Match[str]]] = []
    for priority, (pattern_id, pattern) in enumerate(rules):
        for m in pattern.finditer(text):
            candidates.append((m.start(), -(m.end() - m.start()), priority, pattern_id, m))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))

    matches: list[TimeMatch] = []
    claimed_until = -1
    for start, _neg_len, _priority, pattern_id, m in candidates:
        if start <= claimed_until:
            continue
        matches.append(TimeMatch(m.start(), m.end(), _parse(pattern_id, m), pattern_id))
        claimed_until = m.end() - 1
    return matches


def normalize_times(
    text: str, extra_rules: list[tuple[str, re.Pattern[str]]] | None = None
) -> NormalizedText:
    """Rewrite every matched expression to its canonical rendering.

    Returns the rewritten text and the number of spans that actually changed;
    already-canonical spans count as matches but not as rewrites. Characters
    outside matched spans are preserved verbatim, which makes the operation
    idempotent.
    """
    matches = find_time_expressions(text, extra_rules)
    rewrites = 0
    out = text
    for match in reversed(matches):
        rendering = match.render()
        if out[match.start : match.end] != rendering:
            out = out[: match.start] + rendering + out[match.end :]
            rewrites += 1
    return NormalizedText(out, rewrites)
