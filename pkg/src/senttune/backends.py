"""Labeler backends: the deterministic offline mock and the HTTP client.

A backend exposes two calls that both return raw response text for the
labeling module to parse: ``label(text)`` and ``generate(label, count)``.
Anything satisfying that shape plugs in; nothing here is networked
unless an HttpBackend is explicitly constructed.
"""

import json
import os
import urllib.error
import urllib.request
from typing import Protocol

from . import rng
from .errors import (
    BackendAuthError,
    BackendResponseError,
    BackendTransportError,
    ConfigError,
    ValidationError,
)
from .labeling import (
    SentimentLabel,
    generate_prompt,
    label_prompt,
    mock_lexicon_label,
)


class LabelerBackend(Protocol):
    def label(self, text) -> str: ...

    def generate(self, label, count) -> str: ...


# sentence frames for the offline y→x̂ generator; deliberately
# low-diversity and free of domain slang, mirroring how assistant
# output standardizes phrasing
_POSITIVE_FRAMES = (
    "this adult learning course is {w} and i would recommend it",
    "really {w} experience going back to school as an adult",
    "the evening program is {w} i am glad i enrolled",
    "taking classes again feels {w} every single week",
)
_NEGATIVE_FRAMES = (
    "this adult learning course is {w} and i would not recommend it",
    "really {w} experience going back to school as an adult",
    "the evening program is {w} i regret enrolling",
    "taking classes again feels {w} every single week",
)
_NEUTRAL_FRAMES = (
    "the adult learning course meets twice a week this term",
    "enrollment for the evening program opens next month",
    "the syllabus lists one assignment for each module",
    "classes run online with recordings posted afterwards",
    "the course covers one chapter per session",
    "registration requires a short form and an id",
)


class OfflineBackend:
    """Hermetic mock: lexicon-scored labels, template-built comments.

    ``label`` answers with a short sentence containing exactly one
    sentiment word, chosen by the mock lexicon score of the input.
    ``generate`` fills fixed sentence frames with generic lexicon words;
    output is a pure function of (seed, label, count).
    """

    def __init__(self, lexicon, seed=0):
        if not lexicon:
            raise ValidationError("offline backend needs a non-empty lexicon")
        self.lexicon = dict(lexicon)
        self.seed = int(seed)
        self._positive_words = sorted(w for w, v in lexicon.items() if v > 0)
        self._negative_words = sorted(w for w, v in lexicon.items() if v < 0)

    def label(self, text):
        verdict = mock_lexicon_label(text, self.lexicon)
        return f"Sentiment: {verdict.word}."

    def generate(self, label, count):
        label = SentimentLabel(label)
        if count < 1:
            raise ValidationError(f"count must be >= 1, got {count}")
        stream = rng.stream(self.seed, "generate", label.name, count)
        if label == SentimentLabel.POSITIVE:
            lines = self._filled(_POSITIVE_FRAMES, self._positive_words, count, stream)
        elif label == SentimentLabel.NEGATIVE:
            lines = self._filled(_NEGATIVE_FRAMES, self._negative_words, count, stream)
        else:
            lines = self._neutral(count, stream)
        return "\n".join(lines)

    def _filled(self, frames, fill_words, count, stream):
        if not fill_words:
            raise ValidationError(
                "offline backend lexicon has no words of the requested polarity"
            )
        combos = [
            frame.format(w=word) for word in fill_words for frame in frames
        ]
        order = stream.permutation(len(combos))
        lines = [combos[i] for i in order[: min(count, len(combos))]]
        serial = 0
        while len(lines) < count:
            lines.append(f"{combos[int(order[serial % len(order)])]} session {serial}")
            serial += 1
        return lines

    def _neutral(self, count, stream):
        order = stream.permutation(len(_NEUTRAL_FRAMES))
        lines = [_NEUTRAL_FRAMES[i] for i in order[: min(count, len(_NEUTRAL_FRAMES))]]
        serial = 0
        while len(lines) < count:
            base = _NEUTRAL_FRAMES[int(order[serial % len(order)])]
            lines.append(f"{base} session {serial}")
            serial += 1
        return lines


class HttpBackend:
    """JSON-over-HTTP labeler client.

    POSTs {"model", "prompt"} and reads the "text" field of the JSON
    response.  The bearer token comes only from the environment
    variable named by ``token_env``, never from configuration files.
    """

    def __init__(
        self,
        url,
        model="default",
        timeout=10.0,
        token_env="SENTTUNE_API_TOKEN",
    ):
        if not url:
            raise ConfigError("backend url must be set")
        self.url = url
        self.model = model
        self.timeout = float(timeout)
        self.token_env = token_env

    def _post(self, prompt):
        token = os.environ.get(self.token_env)
        if not token:
            raise BackendAuthError(
                f"auth token environment variable {self.token_env} is not set"
            )
        body = json.dumps({"model": self.model, "prompt": prompt}).encode("utf-8")
        request = urllib.request.Request(
            self.url,
            data=body,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {token}",
            },
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as reply:
                payload = reply.read()
        except urllib.error.HTTPError as exc:
            if exc.code in (401, 403):
                raise BackendAuthError(
                    f"backend rejected credentials (HTTP {exc.code})"
                ) from exc
            raise BackendTransportError(f"HTTP {exc.code} from backend") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendTransportError(f"backend unreachable: {exc}") from exc
        try:
            parsed = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BackendResponseError("backend response is not JSON") from exc
        if not isinstance(parsed, dict) or not isinstance(parsed.get("text"), str):
            raise BackendResponseError('backend response lacks a "text" field')
        return parsed["text"]

    def label(self, text):
        return self._post(label_prompt(text))

    def generate(self, label, count):
        return self._post(generate_prompt(label, count))
