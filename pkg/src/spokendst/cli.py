"""Command line interface for the cascade toolkit.

Exit codes: 0 success, 1 validation error (including bad usage), 2 backend
failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import augment, ensemble, pipeline, times
from .backends import BackendError
from .corpus import (
    Corpus,
    Ontology,
    ValidationError,
    iter_user_turns,
    load_corpus,
    load_ontology,
    load_predictions,
    serialize_corpus,
    serialize_predictions,
)
from .linearize import dst_inputs, serialize_dst_inputs
from .metrics import score_report
from .nouns import load_entity_annotations


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _load_corpus_arg(args) -> Corpus:
    allowed = None
    if getattr(args, "strict", False):
        if not getattr(args, "ontology", None):
            raise ValidationError("--strict requires --ontology")
        allowed = _load_ontology_arg(args).declared_slots()
    return load_corpus(_read(args.corpus), allowed_slots=allowed)


def _load_ontology_arg(args) -> Ontology:
    return load_ontology(_read(args.ontology))


def _out_dir(args) -> Path:
    return Path(args.out)


def cmd_validate(args) -> int:
    corpus = _load_corpus_arg(args)
    ontology = _load_ontology_arg(args) if args.ontology else None
    print(f"OK: {len(corpus.dialogues)} dialogues, {corpus.num_user_turns()} user turns")
    if ontology is not None:
        surfaces = sum(len(v) for v in ontology.categories.values())
        print(
            f"OK: ontology with {len(ontology.categories)} categories, "
            f"{surfaces} surfaces, {len(ontology.time_slots)} time slots"
        )
    return 0


def cmd_normalize(args) -> int:
    corpus = _load_corpus_arg(args)
    annotations = load_entity_annotations(_read(args.annotations)) if args.annotations else None
    extra_rules = (
        times.load_supplementary_rules(_read(args.time_rules)) if args.time_rules else None
    )
    options = pipeline.NormalizeOptions(
        times=args.times,
        nouns=args.nouns,
        delta=args.delta,
        scope=args.scope,
        ner="annotations-file" if args.annotations else "heuristic",
        include_agent_times=args.include_agent,
    )
    normalized, report = pipeline.run_normalize(corpus, options, annotations, extra_rules)
    out = _out_dir(args)
    _write(out / "normalized_corpus.json", serialize_corpus(normalized))
    _write(out / "normalize_report.json", json.dumps(report, ensure_ascii=False, indent=2) + "\n")
    edits = sum(len(r["edits"]) for r in report)
    print(f"normalized {corpus.num_user_turns()} user turns, {edits} edits -> {out}")
    return 0


def cmd_augment_replace_values(args) -> int:
    corpus = _load_corpus_arg(args)
    ontology = _load_ontology_arg(args)
    augmented, maps = augment.replace_corpus_values(corpus, ontology, args.seed)
    out = _out_dir(args)
    _write(out / "augmented_corpus.json", serialize_corpus(augmented))
    _write(
        out / "replacement_maps.json",
        json.dumps(
            {did: dict(sorted(m.entries.items())) for did, m in maps.items()},
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
    )
    total = sum(len(m) for m in maps.values())
    print(f"replaced {total} values across {len(corpus.dialogues)} dialogues -> {out}")
    return 0


def cmd_augment_replace_times(args) -> int:
    corpus = _load_corpus_arg(args)
    ontology = _load_ontology_arg(args)
    augmented = augment.replace_corpus_times(corpus, ontology, args.seed)
    out = _out_dir(args)
    _write(out / "augmented_corpus.json", serialize_corpus(augmented))
    print(f"replaced times in {len(corpus.dialogues)} dialogues -> {out}")
    return 0


def cmd_augment_offset_times(args) -> int:
    corpus = _load_corpus_arg(args)
    augmented = augment.offset_corpus_times(corpus, args.minutes)
    out = _out_dir(args)
    _write(out / "augmented_corpus.json", serialize_corpus(augmented))
    print(f"offset times by {args.minutes} minutes -> {out}")
    return 0


def cmd_augment_noise(args) -> int:
    corpus = _load_corpus_arg(args)
    config = augment.NoiseConfig.for_target_wer(args.wer_target, seed=args.seed)
    table = (
        augment.load_confusion_table(_read(args.confusion_table))
        if args.confusion_table
        else None
    )
    noisy = augment.noise_corpus(corpus, config, table)
    out = _out_dir(args)
    _write(out / "noisy_corpus.json", serialize_corpus(noisy))
    print(f"injected noise targeting WER {args.wer_target:g} -> {out}")
    return 0


def cmd_linearize(args) -> int:
    corpus = _load_corpus_arg(args)
    document = serialize_dst_inputs(dst_inputs(corpus))
    if args.out:
        _write(Path(args.out) / "dst_inputs.jsonl", document)
        print(f"wrote {corpus.num_user_turns()} inputs -> {args.out}")
    else:
        sys.stdout.write(document)
    return 0


def cmd_predict(args) -> int:
    corpus = _load_corpus_arg(args)
    config = pipeline.load_config(_read(args.config))
    predictions, raws = pipeline.run_predict(corpus, config.backend)
    out = _out_dir(args)
    _write(out / "raw_predictions.jsonl", pipeline.raw_predictions_document(raws))
    _write(out / "predictions.jsonl", serialize_predictions(predictions))
    dropped = sum(r.dropped for r in raws)
    print(f"predicted {len(raws)} turns, {dropped} dropped fragments -> {out}")
    return 0


def cmd_score(args) -> int:
    corpus = _load_corpus_arg(args)
    predictions = load_predictions(_read(args.predictions))
    transcripts = None
    if args.transcripts:
        hyp_corpus = load_corpus(_read(args.transcripts))
        hyp_texts = {
            (d.dialogue_id, i): t.text for d, i, t in iter_user_turns(hyp_corpus)
        }
        transcripts = []
        for d, i, turn in iter_user_turns(corpus):
            hyp = hyp_texts.get((d.dialogue_id, i))
            if hyp is None:
                raise ValidationError(
                    f"transcripts corpus is missing user turn ({d.dialogue_id}, {i})"
                )
            transcripts.append((hyp, turn.text))
    report = score_report(corpus, predictions, transcripts=transcripts)
    document = json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if args.out:
        _write(Path(args.out) / "report.json", document)
    sys.stdout.write(document)
    return 0


def cmd_ensemble(args) -> int:
    if len(args.predictions) < 2:
        raise ValidationError("ensemble requires at least two prediction files")
    sets = [load_predictions(_read(path)) for path in args.predictions]
    combined = ensemble.majority_vote(sets)
    document = serialize_predictions(combined)
    if args.out:
        _write(Path(args.out), document)
        print(f"ensembled {len(sets)} sets -> {args.out}")
    else:
        sys.stdout.write(document)
    return 0


def cmd_run(args) -> int:
    config = pipeline.load_config(_read(args.config))
    if args.strict and not (args.ontology or config.ontology):
        raise ValidationError("--strict requires --ontology (flag or config)")
    allowed = None
    if args.strict or config.strict:
        ontology_path = args.ontology or config.ontology
        if not ontology_path:
            raise ValidationError("strict mode requires an ontology")
        allowed = load_ontology(_read(ontology_path)).declared_slots()
    corpus = load_corpus(_read(args.corpus), allowed_slots=allowed)
    annotations = load_entity_annotations(_read(args.annotations)) if args.annotations else None
    extra_rules = (
        times.load_supplementary_rules(_read(args.time_rules)) if args.time_rules else None
    )
    report = pipeline.run_end_to_end(
        corpus,
        config,
        _out_dir(args),
        seed=args.seed,
        annotations=annotations,
        extra_time_rules=extra_rules,
    )
    sys.stdout.write(json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n")
    return 0


def _add_corpus_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("corpus", help="corpus JSON file")


def _add_strict_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ontology", help="ontology JSON file")
    parser.add_argument("--strict", action="store_true", help="validate slot names against the ontology")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spokendst", description="Cascade spoken DST pipeline toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a corpus (and optionally an ontology)")
    _add_corpus_arg(p)
    _add_strict_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("normalize", help="normalize transcripts (times, proper nouns)")
    _add_corpus_arg(p)
    _add_strict_args(p)
    p.add_argument("--times", action="store_true", help="normalize time expressions")
    p.add_argument("--nouns", action="store_true", help="correct proper nouns")
    p.add_argument("--delta", type=float, default=0.3, help="CER threshold (default 0.3)")
    p.add_argument("--scope", choices=["history", "full-dialogue"], default="history")
    p.add_argument("--include-agent", action="store_true", help="also normalize agent turns")
    p.add_argument("--annotations", help="entity annotations JSONL file")
    p.add_argument("--time-rules", help="supplementary time rules JSON file")
    p.add_argument("--out", default="normalize_out", help="output directory")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("augment", help="data augmentation operations")
    aug = p.add_subparsers(dest="augment_command", required=True)

    q = aug.add_parser("replace-values", help="swap entity values for fresh ontology surfaces")
    _add_corpus_arg(q)
    q.add_argument("--ontology", required=True, help="ontology JSON file")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default="augment_out", help="output directory")
    q.add_argument("--strict", action="store_true")
    q.set_defaults(func=cmd_augment_replace_values)

    q = aug.add_parser("replace-times", help="replace time-slot values with random times")
    _add_corpus_arg(q)
    q.add_argument("--ontology", required=True, help="ontology JSON file")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default="augment_out", help="output directory")
    q.add_argument("--strict", action="store_true")
    q.set_defaults(func=cmd_augment_replace_times)

    q = aug.add_parser("offset-times", help="shift all canonical times by a constant")
    _add_corpus_arg(q)
    q.add_argument("--minutes", type=int, required=True)
    q.add_argument("--out", default="augment_out", help="output directory")
    q.set_defaults(func=cmd_augment_offset_times, strict=False, ontology=None)

    q = aug.add_parser("noise", help="corrupt user turns with the ASR noise channel")
    _add_corpus_arg(q)
    q.add_argument("--wer-target", type=float, required=True, help="target corpus WER")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--confusion-table", help="confusion table JSON file")
    q.add_argument("--out", default="augment_out", help="output directory")
    q.set_defaults(func=cmd_augment_noise, strict=False, ontology=None)

    p = sub.add_parser("linearize", help="export DST model inputs")
    _add_corpus_arg(p)
    _add_strict_args(p)
    p.add_argument("--out", help="output directory (stdout when omitted)")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("predict", help="obtain predictions from the configured backend")
    _add_corpus_arg(p)
    _add_strict_args(p)
    p.add_argument("--config", required=True, help="pipeline TOML config")
    p.add_argument("--out", default="predict_out", help="output directory")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", help="score predictions against a reference corpus")
    _add_corpus_arg(p)
    p.add_argument("predictions", help="predictions JSONL file")
    _add_strict_args(p)
    p.add_argument("--transcripts", help="corpus file with hypothesis user texts for WER")
    p.add_argument("--out", help="also write report.json into this directory")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ensemble", help="majority-vote multiple prediction files")
    p.add_argument("predictions", nargs="+", help="prediction files in trust order (>= 2)")
    p.add_argument("--out", help="output predictions file (stdout when omitted)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("run", help="run the full cascade end to end")
    _add_corpus_arg(p)
    p.add_argument("--config", required=True, help="pipeline TOML config")
    p.add_argument("--seed", type=int, default=None, help="override the noise seed")
    p.add_argument("--out", default="run_out", help="run directory")
    p.add_argument("--annotations", help="entity annotations JSONL file")
    p.add_argument("--time-rules", help="supplementary time rules JSON file")
    _add_strict_args(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code is reserved for backend
        # failures, so fold usage problems into the validation exit code.
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
