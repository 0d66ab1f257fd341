"""Comment ingestion and the deterministic cleaning pipeline.

Two text representations leave this module: the cleaned lowercase string
(model input, punctuation and function words retained) and the fully
reduced ``word_tokens`` (stemmed, stopword-free) consumed by insights.
"""

import datetime
import enum
import functools
import importlib.resources
import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParseError, ValidationError
from .stemming import default_stemmer


class Platform(str, enum.Enum):
    REDDIT = "reddit"
    TWITTER = "twitter"
    TUMBLR = "tumblr"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class RawComment:
    id: str
    platform: Platform
    created_at: str
    text: str


@dataclass(frozen=True)
class CleanComment:
    id: str
    text: str
    word_tokens: tuple


@dataclass(frozen=True)
class Provenance:
    sources: tuple = ()
    ingested_at: Optional[str] = None


@dataclass(frozen=True)
class Corpus:
    comments: tuple
    provenance: Provenance = field(default_factory=Provenance)

    def __len__(self):
        return len(self.comments)

    def __iter__(self):
        return iter(self.comments)

    def texts(self):
        return [c.text for c in self.comments]


class IngestResult(tuple):
    """Sequence of RawComment plus the count of skipped incomplete records."""

    skipped: int
    source: str

    def __new__(cls, records, skipped, source):
        self = super().__new__(cls, records)
        self.skipped = skipped
        self.source = source
        return self


_URL_RE = re.compile(r"(?:[a-z][a-z0-9+.-]*://|www\.)\S+", re.IGNORECASE)
_TAG_RE = re.compile(r"<[^<>]*>")
_LINEBREAK_RE = re.compile(r"[\r\n\t\f\v]")
_SPACE_RE = re.compile(r" {2,}")
_WORD_OR_CHAR_RE = re.compile(r"[^\W_]+|[^\w\s]")

# joiners and modifiers that only occur inside pictograph sequences
_EMOJI_EXTRAS = frozenset(
    [0x200D, 0x20E3]
    + list(range(0xFE00, 0xFE10))
    + list(range(0x1F3FB, 0x1F400))
)


def _is_pictograph(ch):
    code = ord(ch)
    if code in _EMOJI_EXTRAS:
        return True
    category = unicodedata.category(ch)
    if category == "So":
        return True
    return category == "Sk" and code >= 0x1F000


def _strip_pictographs(text):
    return "".join(ch for ch in text if not _is_pictograph(ch))


def clean_text(text, keep_emoji=False):
    """Normalize one comment string.

    Passes, in order: drop URLs, drop HTML tags, drop pictographs
    (unless ``keep_emoji``), turn line breaks and tabs into spaces,
    lowercase, collapse runs of spaces and trim.  The pass list repeats
    until the string stops changing, so removing a tag can never leave a
    fresh URL or tag behind and the function is idempotent.
    """
    current = str(text)
    for _ in range(len(current) + 2):
        out = _URL_RE.sub("", current)
        out = _TAG_RE.sub("", out)
        if not keep_emoji:
            out = _strip_pictographs(out)
        out = _LINEBREAK_RE.sub(" ", out)
        out = out.lower()
        out = _SPACE_RE.sub(" ", out).strip()
        if out == current:
            return out
        current = out
    return current


def words(text):
    """Split into word tokens: alphanumeric runs plus lone pictographs.

    Punctuation is dropped; pictograph characters (when present, i.e.
    cleaning ran with ``keep_emoji``) come through as one-char tokens.
    """
    out = []
    for tok in _WORD_OR_CHAR_RE.findall(text):
        if len(tok) == 1 and not tok.isalnum():
            if _is_pictograph(tok):
                out.append(tok)
        else:
            out.append(tok)
    return out


@functools.lru_cache(maxsize=1)
def load_stopwords():
    """Shipped stopword list as a frozenset of lowercase words."""
    ref = importlib.resources.files("senttune.data") / "stopwords.txt"
    entries = []
    for line in ref.read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word and not word.startswith("#"):
            entries.append(word)
    return frozenset(entries)


def effective_stopwords(stopwords):
    """Close a stopword set over tokenization splits and stemming.

    Filtering runs on stemmed tokens, and entries like "aren't" split
    into two tokens, so the match set must contain every split part and
    every stemmed form as well.
    """
    stemmer = default_stemmer()
    closed = set()
    for entry in stopwords:
        for part in [entry] + words(entry):
            closed.add(part)
            closed.add(stemmer.stem(part))
    return frozenset(closed)


@functools.lru_cache(maxsize=1)
def _default_effective_stopwords():
    return effective_stopwords(load_stopwords())


def reduce_tokens(cleaned_text, stop=None):
    """Stem the word tokens of a cleaned text and drop stopwords."""
    if stop is None:
        stop = _default_effective_stopwords()
    stemmer = default_stemmer()
    return tuple(
        t
        for t in (stemmer.stem(w) for w in words(cleaned_text))
        if t and t not in stop
    )


def make_clean_comment(comment_id, text, stop=None, keep_emoji=False):
    """Clean one text and build its CleanComment in a single call."""
    cleaned = clean_text(text, keep_emoji=keep_emoji)
    return CleanComment(
        id=comment_id, text=cleaned, word_tokens=reduce_tokens(cleaned, stop)
    )


def ingest(path, format="jsonl"):
    """Read raw comments from a file, skipping records with no text.

    Returns an IngestResult: a tuple of RawComment in file order with a
    ``skipped`` count of records dropped for missing or empty text.
    Structural problems (bad JSON, missing id, unknown platform, bad
    timestamp, duplicate id) raise ParseError naming the line.
    """
    if format != "jsonl":
        raise ValidationError(f"unsupported corpus format {format!r}")
    records = []
    skipped = 0
    seen_ids = set()
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
            if not isinstance(obj, dict):
                raise ParseError(
                    "record is not a JSON object", path=str(path), line=lineno
                )
            records_id = obj.get("id")
            if not isinstance(records_id, str) or not records_id:
                raise ParseError(
                    "missing or empty 'id'", path=str(path), line=lineno
                )
            if records_id in seen_ids:
                raise ParseError(
                    f"duplicate id {records_id!r}", path=str(path), line=lineno
                )
            seen_ids.add(records_id)
            try:
                platform = Platform(obj.get("platform"))
            except ValueError:
                raise ParseError(
                    f"unknown platform {obj.get('platform')!r}",
                    path=str(path),
                    line=lineno,
                ) from None
            created_at = obj.get("created_at")
            if not isinstance(created_at, str) or not _valid_timestamp(created_at):
                raise ParseError(
                    f"bad 'created_at' timestamp {created_at!r}",
                    path=str(path),
                    line=lineno,
                )
            text = obj.get("text")
            if text is None or text == "":
                skipped += 1
                continue
            if not isinstance(text, str):
                raise ParseError(
                    "'text' must be a string", path=str(path), line=lineno
                )
            records.append(
                RawComment(
                    id=records_id,
                    platform=platform,
                    created_at=created_at,
                    text=text,
                )
            )
    return IngestResult(records, skipped, str(path))


def save_raw_jsonl(records, path):
    """Write RawComment records as one JSON object per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "platform": rec.platform.value,
                        "created_at": rec.created_at,
                        "text": rec.text,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                    ensure_ascii=True,
                )
                + "\n"
            )


def _valid_timestamp(value):
    try:
        datetime.datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        return False
    return True


def preprocess(raw, stopwords=None, keep_emoji=False, provenance=None):
    """Clean, deduplicate, and tokenize a sequence of raw comments.

    Cleaned-empty results are dropped; later records whose cleaned text
    matches an earlier one are dropped; input order is preserved.
    """
    if stopwords is None:
        stop = _default_effective_stopwords()
    else:
        stop = effective_stopwords(stopwords)

    if provenance is None:
        sources = (raw.source,) if isinstance(raw, IngestResult) else ()
        provenance = Provenance(
            sources=sources,
            ingested_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )

    comments = []
    seen_texts = set()
    for rec in raw:
        cleaned = clean_text(rec.text, keep_emoji=keep_emoji)
        if not cleaned or cleaned in seen_texts:
            continue
        seen_texts.add(cleaned)
        comments.append(
            CleanComment(
                id=rec.id, text=cleaned, word_tokens=reduce_tokens(cleaned, stop)
            )
        )
    return Corpus(comments=tuple(comments), provenance=provenance)


def save_clean_jsonl(comments, path):
    """Write CleanComment records as one JSON object per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(
                json.dumps(
                    {"id": c.id, "text": c.text, "word_tokens": list(c.word_tokens)},
                    sort_keys=True,
                    separators=(",", ":"),
                    ensure_ascii=True,
                )
                + "\n"
            )


def load_clean_jsonl(path):
    """Read a cleaned corpus written by save_clean_jsonl."""
    comments = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc.msg}", path=str(path), line=lineno)
            if not isinstance(obj, dict):
                raise ParseError("record is not an object", path=str(path), line=lineno)
            try:
                cid, text, tokens = obj["id"], obj["text"], obj["word_tokens"]
            except KeyError as exc:
                raise ParseError(f"missing key {exc.args[0]}", path=str(path), line=lineno)
            if not isinstance(cid, str) or not cid:
                raise ParseError("id must be a non-empty string", path=str(path), line=lineno)
            if cid in seen:
                raise ParseError(f"duplicate id {cid!r}", path=str(path), line=lineno)
            if not isinstance(text, str) or not isinstance(tokens, list):
                raise ParseError("text must be a string and word_tokens a list",
                                 path=str(path), line=lineno)
            seen.add(cid)
            comments.append(
                CleanComment(id=cid, text=text, word_tokens=tuple(tokens))
            )
    return tuple(comments)
