"""Word-level vocabulary and fixed-length id encoding for the model."""

import io
import re
from dataclasses import dataclass

import numpy as np

from .corpus import words
from .errors import ParseError, ValidationError

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
PAD, UNK, CLS = "[PAD]", "[UNK]", "[CLS]"
_SPECIALS = ((PAD, PAD_ID), (UNK, UNK_ID), (CLS, CLS_ID))

_HEADER_RE = re.compile(r"^#senttune-vocab v1 min_freq=(\d+) max_size=(\d+)$")


@dataclass(frozen=True)
class Vocabulary:
    id_of: dict
    word_of: dict
    min_freq: int
    max_size: int

    @property
    def size(self):
        return len(self.id_of)

    @property
    def specials(self):
        return {PAD: PAD_ID, UNK: UNK_ID, CLS: CLS_ID}

    def lookup(self, word):
        return self.id_of.get(word, UNK_ID)


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple
    mask: tuple


def build_vocab(corpus, min_freq=1, max_size=20000):
    """Rank corpus words by (frequency desc, word asc) and assign ids 3+."""
    if min_freq < 1:
        raise ValidationError(f"min_freq must be >= 1, got {min_freq}")
    if max_size < 4:
        raise ValidationError(f"max_size must be >= 4, got {max_size}")
    texts = corpus.texts() if hasattr(corpus, "texts") else list(corpus)
    if not texts:
        raise ValidationError("cannot build a vocabulary from an empty corpus")

    counts = {}
    for text in texts:
        for w in words(text):
            counts[w] = counts.get(w, 0) + 1
    ranked = sorted(
        (w for w, c in counts.items() if c >= min_freq),
        key=lambda w: (-counts[w], w),
    )[: max_size - 3]

    id_of = {word: wid for word, wid in _SPECIALS}
    for offset, word in enumerate(ranked):
        id_of[word] = 3 + offset
    word_of = {wid: word for word, wid in id_of.items()}
    return Vocabulary(id_of=id_of, word_of=word_of, min_freq=min_freq, max_size=max_size)


def encode(text, vocab, max_len=64):
    """[CLS] + word ids, truncated to max_len then padded with [PAD]."""
    if max_len < 2:
        raise ValidationError(f"max_len must be >= 2, got {max_len}")
    ids = [CLS_ID]
    for w in words(text)[: max_len - 1]:
        ids.append(vocab.lookup(w))
    n = len(ids)
    ids.extend([PAD_ID] * (max_len - n))
    mask = [1] * n + [0] * (max_len - n)
    return TokenSequence(ids=tuple(ids), mask=tuple(mask))


def encode_batch(texts, vocab, max_len=64):
    """Encode many texts into (ids, mask) int64/float64 arrays."""
    ids = np.empty((len(texts), max_len), dtype=np.int64)
    mask = np.empty((len(texts), max_len), dtype=np.float64)
    for i, text in enumerate(texts):
        seq = encode(text, vocab, max_len)
        ids[i] = seq.ids
        mask[i] = seq.mask
    return ids, mask


def decode(ids, vocab):
    """Map ids back to words, dropping [PAD]."""
    out = []
    for i in ids:
        i = int(i)
        word = vocab.word_of.get(i)
        if word is None:
            raise ValidationError(
                f"id {i} out of range for vocabulary of size {vocab.size}"
            )
        if i != PAD_ID:
            out.append(word)
    return out


def vocab_to_text(vocab):
    """Serialize to the one `word<TAB>id` per line text format."""
    buf = io.StringIO()
    buf.write(f"#senttune-vocab v1 min_freq={vocab.min_freq} max_size={vocab.max_size}\n")
    for wid in sorted(vocab.word_of):
        buf.write(f"{vocab.word_of[wid]}\t{wid}\n")
    return buf.getvalue()


def vocab_from_text(text, origin="vocabulary"):
    """Parse the text format back into a Vocabulary, validating layout."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty vocabulary file", path=origin)
    header = _HEADER_RE.match(lines[0].strip())
    if header is None:
        raise ParseError("missing or malformed vocabulary header", path=origin, line=1)
    min_freq, max_size = int(header.group(1)), int(header.group(2))

    id_of = {}
    word_of = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected word<TAB>id", path=origin, line=lineno)
        word, raw_id = parts[0], parts[1].strip()
        try:
            wid = int(raw_id)
        except ValueError:
            raise ParseError(
                f"id {raw_id!r} is not an integer", path=origin, line=lineno
            ) from None
        if word in id_of or wid in word_of:
            raise ParseError(
                f"duplicate entry {word!r}/{wid}", path=origin, line=lineno
            )
        id_of[word] = wid
        word_of[wid] = word

    for word, wid in _SPECIALS:
        if id_of.get(word) != wid:
            raise ParseError(
                f"special token {word} must have id {wid}", path=origin
            )
    if sorted(word_of) != list(range(len(word_of))):
        raise ParseError("vocabulary ids must be contiguous from 0", path=origin)
    return Vocabulary(id_of=id_of, word_of=word_of, min_freq=min_freq, max_size=max_size)


def save_vocab(vocab, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(vocab_to_text(vocab))


def load_vocab(path):
    with open(path, encoding="utf-8") as fh:
        return vocab_from_text(fh.read(), origin=str(path))
