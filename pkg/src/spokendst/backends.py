"""Prediction backends: where linearized dialogue contexts get their states.

A backend maps one DST input to a linearized state string. The file backend
replays a predictions file, keyed either by (dialogue_id, turn_index) or by
the exact context string; the HTTP backend speaks the predict-state protocol
of a model server (POST /v1/predict_state).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import requests

from .corpus import ValidationError, load_predictions
from .linearize import DstInput, serialize_state

logger = logging.getLogger(__name__)

KEY_BY_TURN = "turn"
KEY_BY_CONTEXT = "context"


class BackendError(RuntimeError):
    """A backend failed to produce a prediction after exhausting retries."""


@dataclass(frozen=True)
class BackendSpec:
    kind: str  # "file" | "http"
    path: str | None = None
    key_by: str = KEY_BY_TURN
    base_url: str | None = None
    timeout_s: float = 10.0
    max_in_flight: int = 4
    retries: int = 2

    def __post_init__(self) -> None:
        if self.kind == "file":
            if not self.path:
                raise ValueError("file backend requires a path")
            if self.key_by not in (KEY_BY_TURN, KEY_BY_CONTEXT):
                raise ValueError(f"unknown file backend key mode {self.key_by!r}")
        elif self.kind == "http":
            if not self.base_url:
                raise ValueError("http backend requires a base_url")
        else:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max in-flight requests must be at least 1")
        if self.retries < 0:
            raise ValueError("retry count may not be negative")


class FileBackend:
    """Replays stored predictions.

    In "turn" mode the file is a standard predictions JSONL document and
    lookups use (dialogue_id, turn_index). In "context" mode each line is
    ``{"context": str, "state": str}`` and lookups use the exact linearized
    context, which makes the backend sensitive to upstream text corruption.
    Missing keys yield the empty state with a warning.
    """

    def __init__(self, spec: BackendSpec, document: str):
        self.spec = spec
        self._by_turn: dict[tuple[str, int], str] = {}
        self._by_context: dict[str, str] = {}
        if spec.key_by == KEY_BY_TURN:
            predictions = load_predictions(document)
            for p in predictions.predictions:
                self._by_turn[(p.dialogue_id, p.turn_index)] = serialize_state(p.state)
        else:
            for lineno, line in enumerate(document.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    context, state = record["context"], record["state"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValidationError(
                        f"line {lineno}: bad context-oracle record: {exc}"
                    ) from exc
                if not isinstance(context, str) or not isinstance(state, str):
                    raise ValidationError(f"line {lineno}: context and state must be strings")
                self._by_context[context] = state

    @classmethod
    def from_path(cls, spec: BackendSpec) -> "FileBackend":
        assert spec.path is not None
        with open(spec.path, encoding="utf-8") as handle:
            return cls(spec, handle.read())

    def predict(self, dst_input: DstInput) -> str:
        if self.spec.key_by == KEY_BY_TURN:
            key = (dst_input.dialogue_id, dst_input.turn_index)
            state = self._by_turn.get(key)
        else:
            key = dst_input.text
            state = self._by_context.get(dst_input.text)
        if state is None:
            logger.warning("file backend has no prediction for %r; using empty state", key)
            return ""
        return state

    def close(self) -> None:
        pass


class HttpBackend:
    """Synchronous client for the predict-state HTTP protocol."""

    def __init__(self, spec: BackendSpec, session: requests.Session | None = None):
        self.spec = spec
        self.session = session or requests.Session()

    def predict(self, dst_input: DstInput) -> str:
        assert self.spec.base_url is not None
        url = self.spec.base_url.rstrip("/") + "/v1/predict_state"
        body = {
            "dialogue_id": dst_input.dialogue_id,
            "turn_index": dst_input.turn_index,
            "context": dst_input.text,
        }
        key = (dst_input.dialogue_id, dst_input.turn_index)
        last_error = "no attempt made"
        for _attempt in range(self.spec.retries + 1):
            try:
                response = self.session.post(url, json=body, timeout=self.spec.timeout_s)
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if response.status_code == 200:
                try:
                    state = response.json().get("state")
                except ValueError:
                    last_error = "response body is not JSON"
                    continue
                if isinstance(state, str):
                    return state
                last_error = "response is missing a string 'state' field"
            else:
                last_error = f"HTTP {response.status_code}"
        raise BackendError(f"backend failed for turn {key}: {last_error}")

    def health(self) -> bool:
        assert self.spec.base_url is not None
        url = self.spec.base_url.rstrip("/") + "/v1/health"
        try:
            response = self.session.get(url, timeout=self.spec.timeout_s)
        except requests.RequestException:
            return False
        return response.status_code == 200 and response.json().get("status") == "ok"

    def close(self) -> None:
        self.session.close()


def make_backend(spec: BackendSpec):
    if spec.kind == "file":
        return FileBackend.from_path(spec)
    return HttpBackend(spec)
