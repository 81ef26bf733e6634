"""Cascade spoken dialogue state tracking toolkit."""

from .augment import (
    NoiseConfig,
    ReplacementMap,
    offset_times,
    replace_times,
    replace_values,
    simulate_asr_noise,
)
from .backends import BackendError, BackendSpec, FileBackend, HttpBackend
from .corpus import (
    Corpus,
    Dialogue,
    Ontology,
    Prediction,
    PredictionSet,
    Turn,
    ValidationError,
    load_corpus,
    load_ontology,
    load_predictions,
    serialize_corpus,
    serialize_predictions,
)
from .ensemble import majority_vote
from .linearize import DstInput, build_dst_input, parse_state, serialize_state
from .metrics import ScoreReport, score_jga, score_report, score_ser, wer
from .nouns import EntitySpan, NounCorrectorConfig, cer, correct_nouns, extract_proper_nouns
from .pipeline import (
    NormalizeOptions,
    PipelineConfig,
    load_config,
    run_end_to_end,
    run_normalize,
    run_predict,
)
from .times import CanonicalTime, TimeMatch, find_time_expressions, normalize_times

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BackendSpec",
    "CanonicalTime",
    "Corpus",
    "Dialogue",
    "DstInput",
    "EntitySpan",
    "FileBackend",
    "HttpBackend",
    "NoiseConfig",
    "NormalizeOptions",
    "NounCorrectorConfig",
    "Ontology",
    "PipelineConfig",
    "Prediction",
    "PredictionSet",
    "ReplacementMap",
    "ScoreReport",
    "TimeMatch",
    "Turn",
    "ValidationError",
    "build_dst_input",
    "cer",
    "correct_nouns",
    "extract_proper_nouns",
    "find_time_expressions",
    "load_config",
    "load_corpus",
    "load_ontology",
    "load_predictions",
    "majority_vote",
    "normalize_times",
    "offset_times",
    "parse_state",
    "replace_times",
    "replace_values",
    "run_end_to_end",
    "run_normalize",
    "run_predict",
    "score_jga",
    "score_report",
    "score_ser",
    "serialize_corpus",
    "serialize_predictions",
    "serialize_state",
    "simulate_asr_noise",
    "wer",
]
