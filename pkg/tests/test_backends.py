"""Offline mock backend determinism and the HTTP client's failure handling."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from senttune.backends import HttpBackend, OfflineBackend
from senttune.errors import (
    BackendAuthError,
    BackendResponseError,
    BackendTransportError,
    ConfigError,
    ValidationError,
)
from senttune.labeling import SentimentLabel, parse_label_response

LEXICON = {"love": 1, "great": 1, "helpful": 1, "hate": -1, "boring": -1}


# ------------------------------------------------------------------- offline

def test_offline_label_is_parseable_and_rule_driven():
    backend = OfflineBackend(LEXICON)
    assert parse_label_response(backend.label("love this great course")) == SentimentLabel.POSITIVE
    assert parse_label_response(backend.label("so boring")) == SentimentLabel.NEGATIVE
    assert parse_label_response(backend.label("starts monday")) == SentimentLabel.NEUTRAL


def test_offline_generate_is_deterministic():
    a = OfflineBackend(LEXICON, seed=4).generate(SentimentLabel.POSITIVE, 10)
    b = OfflineBackend(LEXICON, seed=4).generate(SentimentLabel.POSITIVE, 10)
    c = OfflineBackend(LEXICON, seed=5).generate(SentimentLabel.POSITIVE, 10)
    assert a == b
    assert a != c


def test_offline_generate_line_contract():
    backend = OfflineBackend(LEXICON, seed=0)
    for label, wordlist in (
        (SentimentLabel.POSITIVE, ("love", "great", "helpful")),
        (SentimentLabel.NEGATIVE, ("hate", "boring")),
    ):
        lines = backend.generate(label, 8).splitlines()
        assert len(lines) == 8
        assert len(set(lines)) == 8
        assert all(any(w in line for w in wordlist) for line in lines)


def test_offline_generate_neutral_avoids_polar_words():
    lines = OfflineBackend(LEXICON, seed=0).generate(SentimentLabel.NEUTRAL, 10).splitlines()
    assert len(lines) == len(set(lines)) == 10
    polar = set(LEXICON)
    assert all(not polar.intersection(line.split()) for line in lines)


def test_offline_generate_overflow_stays_unique():
    # more comments than frame/word combinations forces suffixed variants
    tiny = OfflineBackend({"good": 1}, seed=1)
    lines = tiny.generate(SentimentLabel.POSITIVE, 12).splitlines()
    assert len(lines) == len(set(lines)) == 12


def test_offline_validation():
    with pytest.raises(ValidationError):
        OfflineBackend({})
    with pytest.raises(ValidationError):
        OfflineBackend(LEXICON).generate(SentimentLabel.POSITIVE, 0)
    with pytest.raises(ValidationError):
        OfflineBackend({"good": 1}).generate(SentimentLabel.NEGATIVE, 3)


# ---------------------------------------------------------------- http server

class _Handler(BaseHTTPRequestHandler):
    seen = {}

    def do_POST(self):
        body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
        _Handler.seen = {
            "path": self.path,
            "auth": self.headers.get("Authorization"),
            "body": json.loads(body.decode("utf-8")),
        }
        if self.path == "/unauth":
            self.send_error(401)
        elif self.path == "/forbidden":
            self.send_error(403)
        elif self.path == "/boom":
            self.send_error(500)
        elif self.path == "/notjson":
            self._reply(b"this is not json")
        elif self.path == "/nofield":
            self._reply(json.dumps({"message": "hi"}).encode())
        else:
            self._reply(json.dumps({"text": "Sentiment: Positive."}).encode())

    def _reply(self, payload):
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def server():
    httpd = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_port}"
    httpd.shutdown()
    thread.join()


@pytest.fixture
def token(monkeypatch):
    monkeypatch.setenv("SENTTUNE_API_TOKEN", "sekrit")


def test_http_requires_url():
    with pytest.raises(ConfigError):
        HttpBackend("")


def test_http_token_comes_from_environment(server, monkeypatch):
    monkeypatch.delenv("SENTTUNE_API_TOKEN", raising=False)
    backend = HttpBackend(server + "/ok")
    with pytest.raises(BackendAuthError, match="SENTTUNE_API_TOKEN"):
        backend.label("anything")


def test_http_label_round_trip(server, token):
    backend = HttpBackend(server + "/ok", model="toy-1")
    assert backend.label("night classes rule") == "Sentiment: Positive."
    assert _Handler.seen["auth"] == "Bearer sekrit"
    assert _Handler.seen["body"]["model"] == "toy-1"
    assert "night classes rule" in _Handler.seen["body"]["prompt"]


def test_http_generate_prompt_payload(server, token):
    HttpBackend(server + "/ok").generate(SentimentLabel.NEGATIVE, 7)
    prompt = _Handler.seen["body"]["prompt"]
    assert "7" in prompt and "Negative" in prompt


def test_http_custom_token_env(server, monkeypatch):
    monkeypatch.delenv("SENTTUNE_API_TOKEN", raising=False)
    monkeypatch.setenv("OTHER_TOKEN", "sekrit")
    assert HttpBackend(server + "/ok", token_env="OTHER_TOKEN").label("x")


@pytest.mark.parametrize("path", ["/unauth", "/forbidden"])
def test_http_credential_rejection(server, token, path):
    with pytest.raises(BackendAuthError, match="HTTP"):
        HttpBackend(server + path).label("x")


def test_http_server_error_is_transport(server, token):
    with pytest.raises(BackendTransportError, match="500"):
        HttpBackend(server + "/boom").label("x")


def test_http_unreachable_is_transport(token):
    with pytest.raises(BackendTransportError, match="unreachable"):
        HttpBackend("http://127.0.0.1:9", timeout=0.5).label("x")


def test_http_bad_payloads(server, token):
    with pytest.raises(BackendResponseError, match="JSON"):
        HttpBackend(server + "/notjson").label("x")
    with pytest.raises(BackendResponseError, match="text"):
        HttpBackend(server + "/nofield").label("x")
