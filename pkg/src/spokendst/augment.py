"""Training-data augmentation: entity value replacement, time manipulation
and a deterministic ASR-noise channel.

Value replacement walks a dialogue's states in turn order, samples a fresh
surface form from the ontology category of each mapped slot (without
replacement within the dialogue), and rewrites every textual mention
consistently, longest original first so that substrings of longer names
("cambridge" inside "cambridge lodge") are never clobbered.

The noise channel stands in for a TTS-then-ASR round trip: per-character
substitutions from a confusion table, deletions, insertions and word merges,
all driven by a seeded generator so corpora corrupt reproducibly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .corpus import Corpus, Dialogue, Ontology, Turn
from .times import CANONICAL_RE, CanonicalTime, normalize_times

logger = logging.getLogger(__name__)

_CANONICAL_OCCURRENCE_RE = re.compile(
    r"(?<![\w:])(?:1[0-2]|[1-9]):[0-5][0-9] (?:am|pm)(?!\w)"
)


@dataclass(frozen=True)
class ReplacementMap:
    """Per-dialogue record of original value -> replacement value."""

    entries: dict[str, str] = field(default_factory=dict)
    exhausted_categories: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class NoiseConfig:
    char_sub_rate: float = 0.0
    char_del_rate: float = 0.0
    char_ins_rate: float = 0.0
    word_merge_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        rates = (self.char_sub_rate, self.char_del_rate, self.char_ins_rate)
        if any(not 0.0 <= r < 1.0 for r in rates + (self.word_merge_rate,)):
            raise ValueError("noise rates must lie in [0, 1)")
        if sum(rates) >= 1.0:
            raise ValueError("character noise rates must sum to less than 1")

    @classmethod
    def for_target_wer(cls, target: float, seed: int = 0) -> "NoiseConfig":
        """Rates calibrated so the measured corpus WER lands near ``target``.

        A word of average length L survives untouched with probability
        (1 - p)^L and each touched word contributes one word error, so the
        per-character rate solves 1 - (1 - p)^L = target for L = 5.
        """
        if not 0.0 <= target < 1.0:
            raise ValueError("target WER must lie in [0, 1)")
        p = 1.0 - (1.0 - target) ** (1.0 / 5.0)
        return cls(
            char_sub_rate=0.6 * p,
            char_del_rate=0.2 * p,
            char_ins_rate=0.2 * p,
            word_merge_rate=0.0,
            seed=seed,
        )


def load_confusion_table(document: str) -> dict[str, list[str]]:
    """Parse a confusion-table JSON document into char -> alternatives."""
    doc = json.loads(document)
    table: dict[str, list[str]] = {}
    for source, target in doc["pairs"]:
        table.setdefault(source, []).append(target)
    return table


def default_confusion_table() -> dict[str, list[str]]:
    text = resources.files("spokendst.data").joinpath("confusion_pairs.json").read_text("utf-8")
    return load_confusion_table(text)


_DEFAULT_TABLE: dict[str, list[str]] | None = None


def _table() -> dict[str, list[str]]:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = default_confusion_table()
    return _DEFAULT_TABLE


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary parts (hash-randomization proof)."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rewrite_text(text: str, mapping: dict[str, str]) -> str:
    """Apply value replacements to free text.

    Originals are matched case-insensitively on word boundaries, processed by
    decreasing length; a span claimed by one rewrite is excluded from further
    matches in the same pass, so replacements never chain.
    """
    claimed: list[tuple[int, int, str]] = []
    for original in sorted(mapping, key=lambda o: (-len(o), o)):
        if not original:
            continue
        pattern = re.compile(rf"(?<!\w){re.escape(original)}(?!\w)", re.IGNORECASE)
        for m in pattern.finditer(text):
            if not any(s < m.end() and m.start() < e for s, e, _ in claimed):
                claimed.append((m.start(), m.end(), mapping[original]))
    out = text
    for start, end, replacement in sorted(claimed, reverse=True):
        out = out[:start] + replacement + out[end:]
    return out


def replace_values(
    dialogue: Dialogue, ontology: Ontology, seed: int
) -> tuple[Dialogue, ReplacementMap]:
    """Swap every mapped slot value for a fresh ontology surface form.

    Sampling is uniform over the slot's category, without replacement within
    the dialogue, and never draws a surface that is itself an original value
    of the dialogue. A value recurring across turns or slots keeps a single
    replacement. When a category runs out of fresh surfaces, sampling falls
    back to reuse with a warning.
    """
    rng = random.Random(seed)

    originals: set[str] = set()
    for turn in dialogue.turns:
        if turn.is_user and turn.state:
            for slot, value in turn.state.items():
                if slot in ontology.slot_to_category:
                    originals.add(value)

    mapping: dict[str, str] = {}
    used: dict[str, set[str]] = {}
    exhausted: list[str] = []

    def sample(category: str) -> str:
        surfaces = ontology.categories[category]
        taken = used.setdefault(category, set())
        fresh = [s for s in surfaces if s not in originals and s not in taken]
        if fresh:
            choice = rng.choice(fresh)
        else:
            pool = [s for s in surfaces if s not in originals] or list(surfaces)
            choice = rng.choice(pool)
            exhausted.append(category)
            logger.warning(
                "dialogue %s: category %r exhausted, sampling with replacement",
                dialogue.dialogue_id,
                category,
            )
        taken.add(choice)
        return choice

    new_turns: list[Turn] = []
    for turn in dialogue.turns:
        if not (turn.is_user and turn.state):
            new_turns.append(turn)
            continue
        new_state: dict[str, str] = {}
        for slot, value in turn.state.items():
            category = ontology.slot_to_category.get(slot)
            if category is None:
                new_state[slot] = value
                continue
            if value not in mapping:
                mapping[value] = sample(category)
            new_state[slot] = mapping[value]
        new_turns.append(replace(turn, state=new_state))

    rewritten = [
        replace(turn, text=rewrite_text(turn.text, mapping)) for turn in new_turns
    ]
    return (
        Dialogue(dialogue.dialogue_id, tuple(rewritten)),
        ReplacementMap(mapping, tuple(exhausted)),
    )


def _random_time(rng: random.Random) -> str:
    return CanonicalTime(
        rng.randint(1, 12), rng.randint(0, 59), rng.choice(["am", "pm"])
    ).render()


def replace_times(dialogue: Dialogue, ontology: Ontology, seed: int) -> Dialogue:
    """Replace every time-slot value with a uniformly random canonical time.

    Values are canonicalized first so states and texts stay string-consistent;
    identical originals within the dialogue receive identical replacements.
    """
    rng = random.Random(seed)
    time_slots = set(ontology.time_slots)
    mapping: dict[str, str] = {}
    text_mapping: dict[str, str] = {}

    new_turns: list[Turn] = []
    for turn in dialogue.turns:
        if not (turn.is_user and turn.state):
            new_turns.append(turn)
            continue
        new_state: dict[str, str] = {}
        for slot, value in turn.state.items():
            if slot not in time_slots:
                new_state[slot] = value
                continue
            canonical = normalize_times(value).text
            if canonical not in mapping:
                mapping[canonical] = _random_time(rng)
                text_mapping[canonical] = mapping[canonical]
                if value != canonical:
                    text_mapping[value] = mapping[canonical]
            new_state[slot] = mapping[canonical]
        new_turns.append(replace(turn, state=new_state))

    rewritten = [
        replace(turn, text=rewrite_text(turn.text, text_mapping)) for turn in new_turns
    ]
    return Dialogue(dialogue.dialogue_id, tuple(rewritten))


def _shift_rendering(rendering: str, minutes: int) -> str:
    hour_minute, meridiem = rendering.rsplit(" ", 1)
    hour, minute = hour_minute.split(":")
    time = CanonicalTime(int(hour), int(minute), meridiem)
    return CanonicalTime.from_minutes(time.to_minutes() + minutes).render()


def offset_times(dialogue: Dialogue, minutes: int) -> Dialogue:
    """Shift every canonical time in states and texts by ``minutes``,
    wrapping modulo 24 hours and re-deriving the meridiem."""
    if not -1440 < minutes < 1440:
        raise ValueError("offset must be strictly between -1440 and 1440 minutes")

    def shift_text(text: str) -> str:
        out = text
        for m in reversed(list(_CANONICAL_OCCURRENCE_RE.finditer(text))):
            out = out[: m.start()] + _shift_rendering(m.group(), minutes) + out[m.end() :]
        return out

    new_turns: list[Turn] = []
    for turn in dialogue.turns:
        state = turn.state
        if turn.is_user and state:
            state = {
                slot: _shift_rendering(value, minutes) if CANONICAL_RE.match(value) else value
                for slot, value in state.items()
            }
        new_turns.append(Turn(turn.speaker, shift_text(turn.text), state))
    return Dialogue(dialogue.dialogue_id, tuple(new_turns))


def simulate_asr_noise(
    text: str,
    config: NoiseConfig,
    table: dict[str, list[str]] | None = None,
    counter: int = 0,
) -> str:
    """Deterministically corrupt a transcript like a noisy ASR channel.

    Per non-space character the generator draws once: with char_sub_rate the
    character is replaced by a confusion-table alternative (case preserved),
    with char_del_rate it is dropped, with char_ins_rate it is doubled.
    Each single space is dropped with word_merge_rate. The generator is
    seeded from (config.seed, counter, text), so identical inputs always
    produce identical outputs; pipelines pass a per-utterance counter.
    """
    if table is None:
        table = _table()
    rng = random.Random(derive_seed(config.seed, counter, text))
    sub = config.char_sub_rate
    delete = sub + config.char_del_rate
    insert = delete + config.char_ins_rate

    out: list[str] = []
    for ch in text:
        if ch.isspace():
            if ch == " " and rng.random() < config.word_merge_rate:
                continue
            out.append(ch)
            continue
        roll = rng.random()
        if roll < sub:
            options = table.get(ch.lower())
            if options:
                picked = rng.choice(options)
                out.append(picked.upper() if ch.isupper() else picked)
            else:
                out.append(ch)
        elif roll < delete:
            continue
        elif roll < insert:
            out.append(ch + ch)
        else:
            out.append(ch)
    return "".join(out)


def noise_corpus(
    corpus: Corpus, config: NoiseConfig, table: dict[str, list[str]] | None = None
) -> Corpus:
    """Corrupt every user turn text; agent turns and gold states are kept.

    Each utterance gets its own generator stream via a counter derived from
    (dialogue_id, turn_index), so results do not depend on processing order.
    """
    dialogues = []
    for dialogue in corpus.dialogues:
        turns = [
            replace(
                turn,
                text=simulate_asr_noise(
                    turn.text, config, table, derive_seed(dialogue.dialogue_id, i)
                ),
            )
            if turn.is_user
            else turn
            for i, turn in enumerate(dialogue.turns)
        ]
        dialogues.append(Dialogue(dialogue.dialogue_id, tuple(turns)))
    return Corpus(tuple(dialogues))


def _per_dialogue_seed(seed: int, dialogue_id: str) -> int:
    return derive_seed(seed, dialogue_id)


def replace_corpus_values(
    corpus: Corpus, ontology: Ontology, seed: int
) -> tuple[Corpus, dict[str, ReplacementMap]]:
    """Value replacement over a whole corpus, one seed stream per dialogue."""
    dialogues = []
    maps: dict[str, ReplacementMap] = {}
    for dialogue in corpus.dialogues:
        new_dialogue, mapping = replace_values(
            dialogue, ontology, _per_dialogue_seed(seed, dialogue.dialogue_id)
        )
        dialogues.append(new_dialogue)
        maps[dialogue.dialogue_id] = mapping
    return Corpus(tuple(dialogues)), maps


def replace_corpus_times(corpus: Corpus, ontology: Ontology, seed: int) -> Corpus:
    return Corpus(
        tuple(
            replace_times(d, ontology, _per_dialogue_seed(seed, d.dialogue_id))
            for d in corpus.dialogues
        )
    )


def offset_corpus_times(corpus: Corpus, minutes: int) -> Corpus:
    return Corpus(tuple(offset_times(d, minutes) for d in corpus.dialogues))
