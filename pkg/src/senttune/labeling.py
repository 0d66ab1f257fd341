"""Labeled datasets: assistant-backed labeling, generation, consensus.

Two training-set construction schemes live here.  Scheme x→ŷ sends real
comments to a labeling backend and parses one sentiment word out of each
response.  Scheme y→x̂ asks the backend to write comments for a given
label.  Gold test labels come from three simulated annotators filtered
through unanimous consensus.
"""

import enum
import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import rng
from .corpus import clean_text, make_clean_comment, words
from .errors import (
    BackendAuthError,
    BackendError,
    ConfigError,
    ParseError,
    QuotaError,
    ValidationError,
)

PROMPT_VERSION = 1


class SentimentLabel(enum.IntEnum):
    POSITIVE = 0
    NEGATIVE = 1
    NEUTRAL = 2

    @property
    def word(self):
        return self.name.capitalize()


class LabelSource(str, enum.Enum):
    LLM = "llm"
    EXPERT_CONSENSUS = "expert_consensus"
    SYNTHETIC_GENERATOR = "synthetic_generator"
    MOCK_LEXICON = "mock_lexicon"


_WORD_TO_LABEL = {label.name.lower(): label for label in SentimentLabel}
_LABEL_WORD_RE = re.compile(r"\b(positive|negative|neutral)\b", re.IGNORECASE)


class _RejectedType:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Rejected"

    def __bool__(self):
        return False


REJECTED = _RejectedType()


@dataclass(frozen=True)
class LabeledExample:
    comment: object
    label: SentimentLabel
    source: LabelSource


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple
    split: str

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValidationError(f"split must be train or test, got {self.split!r}")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def fingerprint(self):
        """Content hash: changes iff ids, texts, labels, or sources change."""
        payload = json.dumps(
            [
                [e.comment.id, e.comment.text, int(e.label), e.source.value]
                for e in self.examples
            ],
            separators=(",", ":"),
            ensure_ascii=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def texts(self):
        return [e.comment.text for e in self.examples]

    def labels(self):
        return [int(e.label) for e in self.examples]


def label_prompt(text):
    """The fixed, versioned instruction sent for every x→ŷ request."""
    return (
        "Classify the sentiment of the social media comment below about "
        "adult learning. Reply with exactly one word: Positive, Negative, "
        f'or Neutral.\nComment: "{text}"'
    )


def generate_prompt(label, count):
    """The fixed, versioned instruction for y→x̂ generation."""
    label = SentimentLabel(label)
    return (
        f"Write {count} short social media comments about adult learning, "
        f"each expressing {label.word} sentiment, one comment per line, "
        "with no numbering."
    )


def parse_label_response(response):
    """Extract the single sentiment word, or None when absent/ambiguous."""
    found = {m.lower() for m in _LABEL_WORD_RE.findall(response or "")}
    if len(found) != 1:
        return None
    return _WORD_TO_LABEL[found.pop()]


def _label_one(comment, backend, retries):
    reason = "no attempts made"
    for _ in range(retries):
        try:
            response = backend.label(comment.text)
        except (BackendAuthError, ConfigError):
            raise
        except BackendError as exc:
            reason = f"backend failure: {exc}"
            continue
        label = parse_label_response(response)
        if label is None:
            reason = f"unparseable response {response!r}"
            continue
        return label, None
    return None, reason


def llm_label(comments, backend, retries=3, max_workers=1):
    """Label comments with the backend (scheme x→ŷ).

    Returns (dataset, rejects): the dataset holds one example per
    successfully labeled comment in input order; rejects is a list of
    (comment, reason) for comments that failed all ``retries`` attempts.
    Auth and configuration errors abort the whole run.  Requests may run
    on up to ``max_workers`` threads; output order is input order.
    """
    comments = list(comments)
    if retries < 1:
        raise ValidationError(f"retries must be >= 1, got {retries}")
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        outcomes = list(pool.map(lambda c: _label_one(c, backend, retries), comments))
    examples = []
    rejects = []
    for comment, (label, reason) in zip(comments, outcomes):
        if label is None:
            rejects.append((comment, reason))
        else:
            examples.append(LabeledExample(comment, label, LabelSource.LLM))
    return LabeledDataset(tuple(examples), split="train"), rejects


def llm_generate(label, count, backend, retries=3):
    """Ask the backend for ``count`` comments with ``label`` (scheme y→x̂).

    Returns (examples, shortfall).  Response lines are cleaned and
    deduplicated; the backend is re-asked up to ``retries`` times for
    any remainder, after which the partial result is returned with the
    number of missing comments as the shortfall.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    label = SentimentLabel(label)
    texts = []
    seen = set()
    for _ in range(retries):
        need = count - len(texts)
        if need <= 0:
            break
        try:
            raw = backend.generate(label, need)
        except (BackendAuthError, ConfigError):
            raise
        except BackendError:
            continue
        for line in raw.splitlines():
            cleaned = clean_text(line)
            if cleaned and cleaned not in seen:
                seen.add(cleaned)
                texts.append(cleaned)
                if len(texts) == count:
                    break
    examples = [
        LabeledExample(
            make_clean_comment(f"gen-{label.name.lower()}-{i:04d}", text),
            label,
            LabelSource.SYNTHETIC_GENERATOR,
        )
        for i, text in enumerate(texts)
    ]
    return examples, count - len(texts)


def mock_lexicon_label(text, lexicon):
    """Deterministic stand-in labeler: sign of the summed lexicon hits."""
    if not lexicon:
        raise ValidationError("lexicon must be non-empty")
    score = sum(lexicon.get(w, 0) for w in words(clean_text(text)))
    if score > 0:
        return SentimentLabel.POSITIVE
    if score < 0:
        return SentimentLabel.NEGATIVE
    return SentimentLabel.NEUTRAL


def consensus(l1, l2, l3):
    """The common label when all three agree, else REJECTED."""
    votes = {SentimentLabel(v) for v in (l1, l2, l3)}
    if len(votes) == 1:
        return votes.pop()
    return REJECTED


def build_test_set(stream, per_class=100):
    """Fill per-class quotas from an ordered (comment, verdict) stream.

    Rejected verdicts and comments of already-full classes are skipped;
    consumption stops as soon as every class holds ``per_class``
    examples.  An exhausted stream raises QuotaError whose ``shortfall``
    maps class name → missing count.
    """
    if per_class < 1:
        raise ValidationError(f"per_class must be >= 1, got {per_class}")
    need = {label: per_class for label in SentimentLabel}
    examples = []
    for comment, verdict in stream:
        if verdict is REJECTED:
            continue
        label = SentimentLabel(verdict)
        if need[label] > 0:
            need[label] -= 1
            examples.append(
                LabeledExample(comment, label, LabelSource.EXPERT_CONSENSUS)
            )
        if all(v == 0 for v in need.values()):
            break
    shortfall = {label.name: v for label, v in need.items() if v > 0}
    if shortfall:
        raise QuotaError(shortfall)
    return LabeledDataset(tuple(examples), split="test")


def simulated_expert_stream(comments, lexicon, error_rate=0.1, seed=0):
    """Three noisy oracle annotators per comment, reduced by consensus.

    Each annotator reads the oracle lexicon label and independently errs
    with probability ``error_rate``, picking one of the other two labels
    uniformly.  Deterministic per (seed, annotator, comment id).
    """
    if not 0.0 <= error_rate < 1.0:
        raise ValidationError(f"error_rate {error_rate} outside [0, 1)")
    for comment in comments:
        truth = mock_lexicon_label(comment.text, lexicon)
        votes = []
        for annotator in range(3):
            stream = rng.stream(seed, "annotator", annotator, comment.id)
            if stream.random() < error_rate:
                shift = 1 + int(stream.integers(0, 2))
                votes.append(SentimentLabel((int(truth) + shift) % 3))
            else:
                votes.append(truth)
        yield comment, consensus(*votes)


def load_lexicon(path):
    """Read a word<TAB>weight sentiment lexicon (+1/-1 per line)."""
    lexicon = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(
                    "expected word<TAB>weight", path=str(path), line=lineno
                )
            word, raw = parts[0].strip(), parts[1].strip()
            try:
                weight = int(raw)
            except ValueError:
                raise ParseError(
                    f"weight {raw!r} is not an integer", path=str(path), line=lineno
                ) from None
            if weight not in (-1, 1):
                raise ParseError(
                    f"weight must be +1 or -1, got {weight}",
                    path=str(path),
                    line=lineno,
                )
            if word in lexicon:
                raise ParseError(
                    f"duplicate word {word!r}", path=str(path), line=lineno
                )
            lexicon[word] = weight
    if not lexicon:
        raise ParseError("lexicon file has no entries", path=str(path))
    return lexicon


_PLACEHOLDER_PLATFORM = "synthetic"
_PLACEHOLDER_TIMESTAMP = "1970-01-01T00:00:00Z"


def save_dataset(dataset, path):
    """Write a labeled dataset as JSONL corpus records with labels.

    Comments carry no platform or timestamp of their own, so the
    records use fixed placeholder values for those keys; the format
    stays ingestible and the bytes stay reproducible.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in dataset.examples:
            fh.write(
                json.dumps(
                    {
                        "id": e.comment.id,
                        "platform": _PLACEHOLDER_PLATFORM,
                        "created_at": _PLACEHOLDER_TIMESTAMP,
                        "text": e.comment.text,
                        "label": e.label.name.lower(),
                        "label_source": e.source.value,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                    ensure_ascii=True,
                )
                + "\n"
            )


def load_dataset(path, split="train"):
    """Read a labeled JSONL file back into a LabeledDataset."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(
                    f"not a JSON record ({exc.msg})", path=str(path), line=lineno
                ) from exc
            for key in ("id", "text", "label", "label_source"):
                if key not in obj:
                    raise ParseError(
                        f"missing key {key!r}", path=str(path), line=lineno
                    )
            word = str(obj["label"]).lower()
            if word not in _WORD_TO_LABEL:
                raise ParseError(
                    f"unknown label {obj['label']!r}", path=str(path), line=lineno
                )
            try:
                source = LabelSource(obj["label_source"])
            except ValueError:
                raise ParseError(
                    f"unknown label_source {obj['label_source']!r}",
                    path=str(path),
                    line=lineno,
                ) from None
            examples.append(
                LabeledExample(
                    make_clean_comment(str(obj["id"]), str(obj["text"])),
                    _WORD_TO_LABEL[word],
                    source,
                )
            )
    return LabeledDataset(tuple(examples), split=split)
