"""End-to-end cascade orchestration.

Wires the stages together: optional ASR-noise injection, transcript
normalization (times first, then proper nouns), history linearization,
backend prediction and scoring. Every intermediate artifact is written to a
run directory with a fixed layout so experiments stay diffable, and all
randomness is derived from explicit seeds, making runs byte-reproducible.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from .augment import NoiseConfig, noise_corpus
from .backends import BackendSpec, HttpBackend, make_backend
from .corpus import (
    Corpus,
    Dialogue,
    Prediction,
    PredictionSet,
    ValidationError,
    iter_user_turns,
    serialize_corpus,
    serialize_predictions,
)
from .linearize import dst_inputs, parse_state, serialize_dst_inputs, serialize_state
from .metrics import ScoreReport, score_report
from .nouns import (
    NER_HEURISTIC,
    SCOPE_HISTORY,
    NounCorrectorConfig,
    correct_dialogue,
)
from .times import find_time_expressions, normalize_times

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizeOptions:
    times: bool = True
    nouns: bool = True
    delta: float = 0.3
    scope: str = SCOPE_HISTORY
    ner: str = NER_HEURISTIC
    include_agent_times: bool = False

    def __post_init__(self) -> None:
        # delegate range checks to the noun corrector config
        NounCorrectorConfig(delta=self.delta, scope=self.scope, ner=self.ner)


@dataclass(frozen=True)
class PipelineConfig:
    backend: BackendSpec
    normalize: NormalizeOptions = field(default_factory=NormalizeOptions)
    noise: NoiseConfig | None = None
    strict: bool = False
    ontology: str | None = None


def load_config(text: str) -> PipelineConfig:
    """Parse a pipeline TOML config mirroring the PipelineConfig fields."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"malformed config: {exc}") from exc
    backend_doc = doc.get("backend")
    if not isinstance(backend_doc, dict):
        raise ValidationError("config must define a [backend] table")
    try:
        backend = BackendSpec(**backend_doc)
        normalize = NormalizeOptions(**doc.get("normalize", {}))
        noise = NoiseConfig(**doc["noise"]) if "noise" in doc else None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad config: {exc}") from exc
    return PipelineConfig(
        backend=backend,
        normalize=normalize,
        noise=noise,
        strict=bool(doc.get("strict", False)),
        ontology=doc.get("ontology"),
    )


def _normalize_turn_times(
    text: str,
    turn_index: int,
    extra_rules: list[tuple[str, re.Pattern[str]]] | None,
    edits: list[dict],
) -> str:
    for m in find_time_expressions(text, extra_rules):
        surface = text[m.start : m.end]
        rendering = m.render()
        if surface != rendering:
            edits.append(
                {
                    "turn_index": turn_index,
                    "kind": "time",
                    "original": surface,
                    "replacement": rendering,
                }
            )
    return normalize_times(text, extra_rules).text


def run_normalize(
    corpus: Corpus,
    options: NormalizeOptions,
    annotations: dict[tuple[str, int], list[tuple[int, int]]] | None = None,
    extra_time_rules: list[tuple[str, re.Pattern[str]]] | None = None,
) -> tuple[Corpus, list[dict]]:
    """Normalize user-turn transcripts: time expressions, then proper nouns.

    Gold states are untouched. Returns the rewritten corpus and a
    per-dialogue edit report (one record per dialogue, each edit naming the
    turn, kind, original and replacement).
    """
    report: list[dict] = []
    new_dialogues: list[Dialogue] = []
    for dialogue in corpus.dialogues:
        edits: list[dict] = []
        if options.times:
            turns = []
            for i, turn in enumerate(dialogue.turns):
                if turn.is_user or options.include_agent_times:
                    text = _normalize_turn_times(turn.text, i, extra_time_rules, edits)
                    turns.append(dc_replace(turn, text=text))
                else:
                    turns.append(turn)
            dialogue = Dialogue(dialogue.dialogue_id, tuple(turns))
        if options.nouns:
            config = NounCorrectorConfig(delta=options.delta, scope=options.scope, ner=options.ner)
            dialogue, noun_edits = correct_dialogue(dialogue, config, annotations)
            edits.extend(noun_edits)
        new_dialogues.append(dialogue)
        report.append({"dialogue_id": dialogue.dialogue_id, "edits": edits})
    return Corpus(tuple(new_dialogues)), report


@dataclass(frozen=True)
class RawPrediction:
    dialogue_id: str
    turn_index: int
    state_text: str
    dropped: int


def run_predict(corpus: Corpus, backend) -> tuple[PredictionSet, list[RawPrediction]]:
    """Query the backend for every user turn, in corpus order.

    ``backend`` is a BackendSpec or an instantiated backend. HTTP backends
    run with the configured number of in-flight requests; assembly order is
    the corpus order regardless of completion order.
    """
    owned = isinstance(backend, BackendSpec)
    if owned:
        backend = make_backend(backend)
    try:
        inputs = dst_inputs(corpus)
        if isinstance(backend, HttpBackend) and backend.spec.max_in_flight > 1:
            with ThreadPoolExecutor(max_workers=backend.spec.max_in_flight) as pool:
                raw_texts = list(pool.map(backend.predict, inputs))
        else:
            raw_texts = [backend.predict(d) for d in inputs]
    finally:
        if owned:
            backend.close()

    predictions: list[Prediction] = []
    raws: list[RawPrediction] = []
    for dst_input, raw in zip(inputs, raw_texts):
        state, dropped = parse_state(raw)
        if dropped:
            logger.warning(
                "dropped %d malformed fragment(s) for turn (%s, %d)",
                dropped,
                dst_input.dialogue_id,
                dst_input.turn_index,
            )
        predictions.append(Prediction(dst_input.dialogue_id, dst_input.turn_index, state))
        raws.append(RawPrediction(dst_input.dialogue_id, dst_input.turn_index, raw, dropped))
    return PredictionSet(tuple(predictions)), raws


def gold_predictions(corpus: Corpus) -> PredictionSet:
    """The oracle prediction set: every user turn's gold state."""
    return PredictionSet(
        tuple(
            Prediction(dialogue.dialogue_id, i, dict(turn.state or {}))
            for dialogue, i, turn in iter_user_turns(corpus)
        )
    )


def context_oracle_document(corpus: Corpus) -> str:
    """JSONL document for a context-keyed oracle file backend: the exact
    linearized history of each user turn mapped to its gold state string."""
    lines = []
    for dst_input, (_, _, turn) in zip(dst_inputs(corpus), iter_user_turns(corpus)):
        lines.append(
            json.dumps(
                {"context": dst_input.text, "state": serialize_state(turn.state or {})},
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def raw_predictions_document(raws: list[RawPrediction]) -> str:
    lines = [
        json.dumps(
            {
                "dialogue_id": r.dialogue_id,
                "turn_index": r.turn_index,
                "state": r.state_text,
                "dropped": r.dropped,
            },
            ensure_ascii=False,
        )
        for r in raws
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def run_end_to_end(
    corpus: Corpus,
    config: PipelineConfig,
    out_dir: str | Path,
    seed: int | None = None,
    annotations: dict[tuple[str, int], list[tuple[int, int]]] | None = None,
    extra_time_rules: list[tuple[str, re.Pattern[str]]] | None = None,
) -> ScoreReport:
    """Run the full cascade and write every artifact under ``out_dir``.

    Layout: inputs/corpus.json, noisy_corpus.json (when noise is on),
    normalized_corpus.json, normalize_report.json, dst_inputs.jsonl,
    raw_predictions.jsonl, predictions.jsonl, report.json, run.log. Identical
    (corpus, config, seed) produce byte-identical run directories; the log
    carries no timestamps for that reason.
    """
    out = Path(out_dir)
    log_lines: list[str] = []
    _write(out / "inputs" / "corpus.json", serialize_corpus(corpus))

    working = corpus
    if config.noise is not None:
        noise_config = config.noise if seed is None else dc_replace(config.noise, seed=seed)
        working = noise_corpus(working, noise_config)
        _write(out / "noisy_corpus.json", serialize_corpus(working))
        log_lines.append(
            "noise: sub=%g del=%g ins=%g merge=%g seed=%d"
            % (
                noise_config.char_sub_rate,
                noise_config.char_del_rate,
                noise_config.char_ins_rate,
                noise_config.word_merge_rate,
                noise_config.seed,
            )
        )
    else:
        log_lines.append("noise: disabled")

    normalized, edit_report = run_normalize(working, config.normalize, annotations, extra_time_rules)
    _write(out / "normalized_corpus.json", serialize_corpus(normalized))
    _write(
        out / "normalize_report.json",
        json.dumps(edit_report, ensure_ascii=False, indent=2) + "\n",
    )
    edit_count = sum(len(r["edits"]) for r in edit_report)
    log_lines.append(
        f"normalize: times={config.normalize.times} nouns={config.normalize.nouns} "
        f"delta={config.normalize.delta:g} edits={edit_count}"
    )

    inputs = dst_inputs(normalized)
    _write(out / "dst_inputs.jsonl", serialize_dst_inputs(inputs))

    predictions, raws = run_predict(normalized, config.backend)
    _write(out / "raw_predictions.jsonl", raw_predictions_document(raws))
    _write(out / "predictions.jsonl", serialize_predictions(predictions))
    dropped = sum(r.dropped for r in raws)
    log_lines.append(f"predict: turns={len(raws)} dropped_fragments={dropped}")

    transcripts = [
        (norm_turn.text, orig_turn.text)
        for (_, _, norm_turn), (_, _, orig_turn) in zip(
            iter_user_turns(normalized), iter_user_turns(corpus)
        )
    ]
    report = score_report(corpus, predictions, transcripts=transcripts)
    _write(out / "report.json", json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n")
    log_lines.append(
        f"score: jga={report.jga:.6f} ser={report.ser:.6f}"
        + (f" wer={report.wer:.6f}" if report.wer is not None else "")
    )
    _write(out / "run.log", "\n".join(log_lines) + "\n")
    return report
