import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from spokendst import load_corpus, serialize_corpus
from spokendst.backends import (
    BackendError,
    BackendSpec,
    FileBackend,
    HttpBackend,
)
from spokendst.corpus import serialize_predictions
from spokendst.linearize import DstInput
from spokendst.metrics import score_jga
from spokendst.pipeline import (
    NormalizeOptions,
    context_oracle_document,
    gold_predictions,
    load_config,
    run_end_to_end,
    run_normalize,
    run_predict,
)

from conftest import make_corpus


def test_load_config_file_backend(tmp_path):
    config = load_config(
        """
strict = false

[normalize]
times = true
nouns = true
delta = 0.25
scope = "history"

[noise]
char_sub_rate = 0.02
seed = 7

[backend]
kind = "file"
path = "predictions.jsonl"
"""
    )
    assert config.backend.kind == "file"
    assert config.normalize.delta == 0.25
    assert config.noise is not None and config.noise.seed == 7


def test_load_config_http_backend():
    config = load_config(
        """
[backend]
kind = "http"
base_url = "http://localhost:9000"
timeout_s = 5.0
max_in_flight = 2
retries = 1
"""
    )
    assert config.backend.base_url == "http://localhost:9000"
    assert config.noise is None


def test_load_config_rejects_bad_values():
    from spokendst.corpus import ValidationError

    with pytest.raises(ValidationError):
        load_config("[backend]\nkind = 'file'\n")  # missing path
    with pytest.raises(ValidationError):
        load_config("[backend]\nkind = 'file'\npath = 'x'\n\n[normalize]\ndelta = 3.0\n")
    with pytest.raises(ValidationError):
        load_config("")


# --- normalization ----------------------------------------------------------


def normalization_corpus():
    return load_corpus(
        make_corpus(
            [
                (
                    "d1",
                    [
                        ("user", "hi there", {}),
                        ("agent", "i found the Itta Bena diner."),
                        (
                            "user",
                            "book the Itta Benna diner for quarter past 10 am",
                            {"restaurant-name": "itta bena diner"},
                        ),
                    ],
                )
            ]
        )
    )


def test_run_normalize_composes_times_then_nouns():
    corpus = normalization_corpus()
    options = NormalizeOptions(times=True, nouns=True, delta=0.3)
    normalized, report = run_normalize(corpus, options)
    text = normalized.dialogues[0].turns[2].text
    assert text == "book the Itta Bena diner for 10:15 am"
    edits = report[0]["edits"]
    assert len(edits) == 2
    assert {e["kind"] for e in edits} == {"time", "noun"}
    # gold states untouched
    assert normalized.dialogues[0].turns[2].state == {"restaurant-name": "itta bena diner"}


def test_run_normalize_disabled_is_identity():
    corpus = normalization_corpus()
    options = NormalizeOptions(times=False, nouns=False)
    normalized, report = run_normalize(corpus, options)
    assert serialize_corpus(normalized) == serialize_corpus(corpus)
    assert all(not r["edits"] for r in report)


def test_run_normalize_skips_agent_turns_by_default():
    corpus = load_corpus(
        make_corpus(
            [
                (
                    "d1",
                    [
                        ("user", "hello", {}),
                        ("agent", "we open at half past seven pm."),
                    ],
                )
            ]
        )
    )
    normalized, _ = run_normalize(corpus, NormalizeOptions(times=True, nouns=False))
    assert normalized.dialogues[0].turns[1].text == "we open at half past seven pm."
    both, _ = run_normalize(
        corpus, NormalizeOptions(times=True, nouns=False, include_agent_times=True)
    )
    assert both.dialogues[0].turns[1].text == "we open at 7:30 pm."


# --- backends ---------------------------------------------------------------


def test_file_backend_replays_gold(tmp_path, fixture_corpus):
    path = tmp_path / "gold.jsonl"
    path.write_text(serialize_predictions(gold_predictions(fixture_corpus)), encoding="utf-8")
    spec = BackendSpec(kind="file", path=str(path))
    predictions, raws = run_predict(fixture_corpus, spec)
    assert score_jga(fixture_corpus, predictions) == 1.0
    assert all(r.dropped == 0 for r in raws)


def test_file_backend_missing_key_is_empty_state(tmp_path, caplog):
    corpus = load_corpus(make_corpus([("d1", [("user", "x", {"hotel-area": "north"})])]))
    path = tmp_path / "gold.jsonl"
    path.write_text("", encoding="utf-8")
    spec = BackendSpec(kind="file", path=str(path))
    with caplog.at_level("WARNING"):
        predictions, _ = run_predict(corpus, spec)
    assert predictions.to_dict() == {("d1", 0): {}}
    assert any("no prediction" in r.message for r in caplog.records)


def test_context_file_backend_is_text_sensitive(tmp_path, fixture_corpus):
    path = tmp_path / "oracle.jsonl"
    path.write_text(context_oracle_document(fixture_corpus), encoding="utf-8")
    spec = BackendSpec(kind="file", path=str(path), key_by="context")
    backend = FileBackend.from_path(spec)

    dialogue = fixture_corpus.dialogues[0]
    hit = backend.predict(DstInput("user: i need a train from Cambridge", dialogue.dialogue_id, 0))
    assert "train-departure=cambridge" in hit
    miss = backend.predict(DstInput("user: i need a train from Cembridge", dialogue.dialogue_id, 0))
    assert miss == ""


def test_backend_spec_validation():
    with pytest.raises(ValueError):
        BackendSpec(kind="file")
    with pytest.raises(ValueError):
        BackendSpec(kind="http")
    with pytest.raises(ValueError):
        BackendSpec(kind="http", base_url="http://x", timeout_s=0)
    with pytest.raises(ValueError):
        BackendSpec(kind="carrier-pigeon")


class _StubHandler(BaseHTTPRequestHandler):
    flaky_remaining = 0
    calls = 0

    def do_POST(self):
        cls = type(self)
        cls.calls += 1
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        if cls.flaky_remaining > 0:
            cls.flaky_remaining -= 1
            self.send_response(500)
            self.end_headers()
            return
        state = f"hotel-name=stub {body['turn_index']}"
        payload = json.dumps({"state": state}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.flaky_remaining = 0
    _StubHandler.calls = 0
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_http_backend_round_trip(stub_server):
    corpus = load_corpus(
        make_corpus(
            [
                ("d1", [("user", "x", {}), ("agent", "y"), ("user", "z", {})]),
                ("d2", [("user", "q", {})]),
            ]
        )
    )
    spec = BackendSpec(kind="http", base_url=stub_server, max_in_flight=3)
    predictions, raws = run_predict(corpus, spec)
    assert [r.state_text for r in raws] == [
        "hotel-name=stub 0",
        "hotel-name=stub 2",
        "hotel-name=stub 0",
    ]
    assert predictions.to_dict()[("d1", 2)] == {"hotel-name": "stub 2"}


def test_http_backend_retries_then_succeeds(stub_server):
    _StubHandler.flaky_remaining = 1
    spec = BackendSpec(kind="http", base_url=stub_server, retries=2, max_in_flight=1)
    backend = HttpBackend(spec)
    state = backend.predict(DstInput("user: x", "d1", 0))
    assert state == "hotel-name=stub 0"
    assert _StubHandler.calls == 2


def test_http_backend_exhausts_retries(stub_server):
    _StubHandler.flaky_remaining = 99
    spec = BackendSpec(kind="http", base_url=stub_server, retries=1, max_in_flight=1)
    backend = HttpBackend(spec)
    with pytest.raises(BackendError, match=r"\('d1', 0\)"):
        backend.predict(DstInput("user: x", "d1", 0))
    assert _StubHandler.calls == 2


def test_http_backend_unreachable():
    spec = BackendSpec(kind="http", base_url="http://127.0.0.1:9", retries=0, timeout_s=0.5)
    backend = HttpBackend(spec)
    with pytest.raises(BackendError):
        backend.predict(DstInput("user: x", "d1", 0))
    assert backend.health() is False


# --- end to end ---------------------------------------------------------------


def run_config(backend_path: str, times=False, nouns=False, noise_table=None) -> str:
    lines = [
        "[normalize]",
        f"times = {str(times).lower()}",
        f"nouns = {str(nouns).lower()}",
        "",
        "[backend]",
        'kind = "file"',
        f'path = "{backend_path}"',
    ]
    if noise_table:
        lines = noise_table + [""] + lines
    return "\n".join(lines) + "\n"


def dir_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_end_to_end_oracle(tmp_path, fixture_corpus):
    gold_path = tmp_path / "gold.jsonl"
    gold_path.write_text(
        serialize_predictions(gold_predictions(fixture_corpus)), encoding="utf-8"
    )
    config = load_config(run_config(gold_path.as_posix()))
    report = run_end_to_end(fixture_corpus, config, tmp_path / "run1")
    assert report.jga == 1.0
    assert report.ser == 0.0
    assert report.wer == 0.0

    run_end_to_end(fixture_corpus, config, tmp_path / "run2")
    assert dir_digest(tmp_path / "run1") == dir_digest(tmp_path / "run2")

    expected = {
        "inputs/corpus.json",
        "normalized_corpus.json",
        "normalize_report.json",
        "dst_inputs.jsonl",
        "raw_predictions.jsonl",
        "predictions.jsonl",
        "report.json",
        "run.log",
    }
    assert set(dir_digest(tmp_path / "run1")) == expected
    log_text = (tmp_path / "run1" / "run.log").read_text()
    assert "jga=1.000000" in log_text


def test_end_to_end_noise_breaks_context_oracle(tmp_path, fixture_corpus):
    oracle_path = tmp_path / "oracle.jsonl"
    oracle_path.write_text(context_oracle_document(fixture_corpus), encoding="utf-8")
    noise = [
        "[noise]",
        "char_sub_rate = 0.0125",
        "char_del_rate = 0.004",
        "char_ins_rate = 0.004",
        "seed = 11",
    ]
    config_text = run_config(oracle_path.as_posix(), noise_table=noise)
    config_text += 'key_by = "context"\n'
    config = load_config(config_text)
    report = run_end_to_end(fixture_corpus, config, tmp_path / "noisy_run")
    assert report.jga < 1.0
    assert report.wer is not None and report.wer > 0.0
    assert (tmp_path / "noisy_run" / "noisy_corpus.json").exists()

    # identical seeded runs are byte-identical
    report2 = run_end_to_end(fixture_corpus, config, tmp_path / "noisy_run2")
    assert dir_digest(tmp_path / "noisy_run") == dir_digest(tmp_path / "noisy_run2")
    assert report2.jga == report.jga


def test_pipeline_adds_no_hidden_transformation(tmp_path, fixture_corpus):
    # with normalization off and zero noise, the end-to-end score equals
    # scoring the backend's raw predictions directly
    from spokendst.metrics import score_report

    gold_path = tmp_path / "gold.jsonl"
    gold_path.write_text(
        serialize_predictions(gold_predictions(fixture_corpus)), encoding="utf-8"
    )
    config = load_config(run_config(gold_path.as_posix()))
    end_to_end = run_end_to_end(fixture_corpus, config, tmp_path / "run")
    spec = BackendSpec(kind="file", path=str(gold_path))
    predictions, _ = run_predict(fixture_corpus, spec)
    direct = score_report(fixture_corpus, predictions)
    assert end_to_end.jga == direct.jga
    assert end_to_end.ser == direct.ser
