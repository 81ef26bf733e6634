"""Scoring: joint goal accuracy, slot error rate and word error rate.

JGA is the fraction of user turns whose predicted state equals the gold
state exactly (as a set of normalized slot-value pairs). SER aligns states
by slot name and counts substitutions (slot present on both sides with
different values), deletions (slot only in the reference) and insertions
(slot only in the hypothesis), normalized by the number of reference slots.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .corpus import Corpus, PredictionSet, ValidationError, iter_user_turns
from .editdist import levenshtein

logger = logging.getLogger(__name__)

_WER_PUNCT = str.maketrans("", "", '.,?!;:"')


@dataclass(frozen=True)
class SlotAlignmentCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    reference_slots: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass(frozen=True)
class TurnAccuracyCounts:
    correct_turns: int
    total_turns: int


@dataclass
class ScoreReport:
    jga: float
    ser: float
    counts: SlotAlignmentCounts
    turn_counts: TurnAccuracyCounts
    per_slot: dict[str, SlotAlignmentCounts] = field(default_factory=dict)
    per_domain: dict[str, SlotAlignmentCounts] = field(default_factory=dict)
    wer: float | None = None

    def to_dict(self) -> dict:
        def breakdown(counts: SlotAlignmentCounts) -> dict:
            return {
                "S": counts.substitutions,
                "D": counts.deletions,
                "I": counts.insertions,
                "N_s": counts.reference_slots,
            }

        out: dict = {
            "jga": self.jga,
            "ser": self.ser,
            "counts": {
                **breakdown(self.counts),
                "C": self.turn_counts.correct_turns,
                "N_t": self.turn_counts.total_turns,
            },
            "per_slot": {slot: breakdown(c) for slot, c in sorted(self.per_slot.items())},
            "per_domain": {d: breakdown(c) for d, c in sorted(self.per_domain.items())},
        }
        if self.wer is not None:
            out["wer"] = self.wer
        return out


def _check_hypothesis_keys(reference: Corpus, hypothesis: PredictionSet) -> None:
    user_keys = {
        (dialogue.dialogue_id, i) for dialogue, i, _ in iter_user_turns(reference)
    }
    for prediction in hypothesis.predictions:
        key = (prediction.dialogue_id, prediction.turn_index)
        if key not in user_keys:
            raise ValidationError(
                f"prediction references unknown user turn {key} in the reference corpus"
            )


def _turn_pairs(reference: Corpus, hypothesis: PredictionSet):
    """Yield (gold_state, predicted_state) per user turn; missing predictions
    count as empty states (warned once)."""
    _check_hypothesis_keys(reference, hypothesis)
    predicted = hypothesis.to_dict()
    missing = 0
    for dialogue, i, turn in iter_user_turns(reference):
        hyp = predicted.get((dialogue.dialogue_id, i))
        if hyp is None:
            missing += 1
            hyp = {}
        yield turn.state or {}, hyp
    if missing:
        logger.warning("%d user turns had no prediction; scored as empty states", missing)


def turn_accuracy_counts(reference: Corpus, hypothesis: PredictionSet) -> TurnAccuracyCounts:
    correct = total = 0
    for gold, hyp in _turn_pairs(reference, hypothesis):
        total += 1
        if gold == hyp:
            correct += 1
    if total == 0:
        raise ValidationError("JGA undefined: reference corpus has no user turns")
    return TurnAccuracyCounts(correct, total)


def score_jga(reference: Corpus, hypothesis: PredictionSet) -> float:
    """Fraction of user turns predicted exactly; missing predictions are empty."""
    counts = turn_accuracy_counts(reference, hypothesis)
    return counts.correct_turns / counts.total_turns


def slot_alignment(
    reference: Corpus, hypothesis: PredictionSet
) -> dict[str, SlotAlignmentCounts]:
    """Per-slot substitution/deletion/insertion counts over the corpus."""
    tally: dict[str, list[int]] = {}

    def bucket(slot: str) -> list[int]:
        return tally.setdefault(slot, [0, 0, 0, 0])  # S, D, I, N_s

    for gold, hyp in _turn_pairs(reference, hypothesis):
        for slot, value in gold.items():
            counts = bucket(slot)
            counts[3] += 1
            if slot not in hyp:
                counts[1] += 1
            elif hyp[slot] != value:
                counts[0] += 1
        for slot in hyp:
            if slot not in gold:
                bucket(slot)[2] += 1
    return {slot: SlotAlignmentCounts(*c) for slot, c in tally.items()}


def _sum_counts(parts) -> SlotAlignmentCounts:
    return SlotAlignmentCounts(
        sum(p.substitutions for p in parts),
        sum(p.deletions for p in parts),
        sum(p.insertions for p in parts),
        sum(p.reference_slots for p in parts),
    )


def score_ser(
    reference: Corpus, hypothesis: PredictionSet
) -> tuple[float, SlotAlignmentCounts]:
    """Slot error rate (S + D + I) / N_s with its alignment counts."""
    per_slot = slot_alignment(reference, hypothesis)
    totals = _sum_counts(per_slot.values())
    if totals.reference_slots == 0:
        raise ValidationError("SER undefined: reference corpus contains no slots")
    return totals.errors / totals.reference_slots, totals


def _wer_tokens(text: str) -> list[str]:
    return text.lower().translate(_WER_PUNCT).split()


def wer(hyp: str, ref: str) -> float:
    """Word error rate: word-level edit distance over reference token count."""
    ref_tokens = _wer_tokens(ref)
    if not ref_tokens:
        raise ValueError("undefined WER: empty reference")
    return levenshtein(_wer_tokens(hyp), ref_tokens) / len(ref_tokens)


def corpus_wer(pairs: list[tuple[str, str]]) -> float:
    """Token-weighted corpus WER: total edit distance over total reference
    tokens, not the mean of per-utterance rates."""
    distance = tokens = 0
    for hyp, ref in pairs:
        ref_tokens = _wer_tokens(ref)
        distance += levenshtein(_wer_tokens(hyp), ref_tokens)
        tokens += len(ref_tokens)
    if tokens == 0:
        raise ValueError("undefined WER: no reference tokens")
    return distance / tokens


def score_report(
    reference: Corpus,
    hypothesis: PredictionSet,
    transcripts: list[tuple[str, str]] | None = None,
) -> ScoreReport:
    """Full evaluation report; ``transcripts`` are (hypothesis, reference)
    text pairs used for the optional corpus WER."""
    turn_counts = turn_accuracy_counts(reference, hypothesis)
    per_slot = slot_alignment(reference, hypothesis)
    totals = _sum_counts(per_slot.values())
    if totals.reference_slots == 0:
        raise ValidationError("SER undefined: reference corpus contains no slots")

    per_domain: dict[str, SlotAlignmentCounts] = {}
    for slot, counts in per_slot.items():
        domain = slot.split("-", 1)[0]
        merged = per_domain.get(domain)
        per_domain[domain] = _sum_counts([merged, counts]) if merged else counts

    return ScoreReport(
        jga=turn_counts.correct_turns / turn_counts.total_turns,
        ser=totals.errors / totals.reference_slots,
        counts=totals,
        turn_counts=turn_counts,
        per_slot=per_slot,
        per_domain=per_domain,
        wer=corpus_wer(transcripts) if transcripts is not None else None,
    )
