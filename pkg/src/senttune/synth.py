"""Synthetic oracle corpora for desk-scale experiments.

A generator spec defines a generic sentiment lexicon, extra
domain-specific slang, neutral filler vocabulary, class priors, a
length range, label noise, and how often domain comments lean on slang.
The stored label of every generated comment is reproducible from the
generating lexicon, which is what makes these corpora an oracle: any
labeler or model can be scored against ground truth exactly.
"""

import importlib.resources
import json
from dataclasses import dataclass

import numpy as np

from . import rng
from .corpus import Platform, RawComment, make_clean_comment
from .errors import ParseError, ValidationError
from .labeling import LabeledDataset, LabeledExample, LabelSource, SentimentLabel

SPEC_VERSION = 1


@dataclass(frozen=True)
class GeneratorSpec:
    generic_positive: tuple
    generic_negative: tuple
    domain_positive: tuple
    domain_negative: tuple
    neutral_fillers: tuple
    topic_bigrams: tuple
    priors: tuple = (1 / 3, 1 / 3, 1 / 3)
    length_min: int = 6
    length_max: int = 14
    noise_rate: float = 0.0
    domain_injection_rate: float = 0.85
    n_generic_train: int = 1200
    n_domain_train: int = 1000
    n_domain_test: int = 300

    def validate(self):
        problems = []
        pos = set(self.generic_positive) | set(self.domain_positive)
        neg = set(self.generic_negative) | set(self.domain_negative)
        neutral = set(self.neutral_fillers) | {
            w for pair in self.topic_bigrams for w in pair
        }
        if not self.generic_positive or not self.generic_negative:
            problems.append("generic lexicon needs words of both polarities")
        if not self.domain_positive or not self.domain_negative:
            problems.append("domain lexicon needs words of both polarities")
        if not self.neutral_fillers:
            problems.append("neutral filler list is empty")
        if pos & neg:
            problems.append(f"words in both polarities: {sorted(pos & neg)}")
        if (pos | neg) & neutral:
            problems.append(
                f"sentiment words reused as neutral vocabulary: "
                f"{sorted((pos | neg) & neutral)}"
            )
        if set(self.generic_positive) & set(self.domain_positive) or set(
            self.generic_negative
        ) & set(self.domain_negative):
            problems.append("domain lexicon must hold only words absent generically")
        if any(len(pair) != 2 for pair in self.topic_bigrams):
            problems.append("topic bigrams must be word pairs")
        if len(self.priors) != 3 or abs(sum(self.priors) - 1.0) > 1e-9:
            problems.append(f"priors must be 3 values summing to 1, got {self.priors}")
        if any(p < 0 for p in self.priors):
            problems.append("priors must be non-negative")
        if not 2 <= self.length_min <= self.length_max:
            problems.append(
                f"bad length range [{self.length_min}, {self.length_max}]"
            )
        if not 0.0 <= self.noise_rate < 1.0:
            problems.append(f"noise_rate {self.noise_rate} outside [0, 1)")
        if not 0.0 <= self.domain_injection_rate <= 1.0:
            problems.append(
                f"domain_injection_rate {self.domain_injection_rate} outside [0, 1]"
            )
        for field_name in ("n_generic_train", "n_domain_train", "n_domain_test"):
            if getattr(self, field_name) < 3:
                problems.append(f"{field_name} must be >= 3")
        words = pos | neg | neutral
        if any((not w) or w != w.lower() or (" " in w) for w in words):
            problems.append("all spec words must be non-empty lowercase tokens")
        if problems:
            raise ValidationError("invalid generator spec: " + "; ".join(problems))
        return self

    def generic_lexicon(self):
        lex = {w: 1 for w in self.generic_positive}
        lex.update({w: -1 for w in self.generic_negative})
        return lex

    def full_lexicon(self):
        """The generating lexicon: generic plus domain slang."""
        lex = self.generic_lexicon()
        lex.update({w: 1 for w in self.domain_positive})
        lex.update({w: -1 for w in self.domain_negative})
        return lex

    def to_dict(self):
        return {
            "version": SPEC_VERSION,
            "generic_lexicon": {
                "positive": list(self.generic_positive),
                "negative": list(self.generic_negative),
            },
            "domain_lexicon": {
                "positive": list(self.domain_positive),
                "negative": list(self.domain_negative),
            },
            "neutral_fillers": list(self.neutral_fillers),
            "topic_bigrams": [list(p) for p in self.topic_bigrams],
            "priors": list(self.priors),
            "length": {"min": self.length_min, "max": self.length_max},
            "noise_rate": self.noise_rate,
            "domain_injection_rate": self.domain_injection_rate,
            "sizes": {
                "generic_train": self.n_generic_train,
                "domain_train": self.n_domain_train,
                "domain_test": self.n_domain_test,
            },
        }

    @classmethod
    def from_dict(cls, obj, origin="generator spec"):
        try:
            if obj.get("version") != SPEC_VERSION:
                raise ParseError(
                    f"unsupported spec version {obj.get('version')!r}", path=origin
                )
            sizes = obj.get("sizes", {})
            length = obj.get("length", {})
            spec = cls(
                generic_positive=tuple(obj["generic_lexicon"]["positive"]),
                generic_negative=tuple(obj["generic_lexicon"]["negative"]),
                domain_positive=tuple(obj["domain_lexicon"]["positive"]),
                domain_negative=tuple(obj["domain_lexicon"]["negative"]),
                neutral_fillers=tuple(obj["neutral_fillers"]),
                topic_bigrams=tuple(tuple(p) for p in obj["topic_bigrams"]),
                priors=tuple(obj.get("priors", (1 / 3, 1 / 3, 1 / 3))),
                length_min=int(length.get("min", 6)),
                length_max=int(length.get("max", 14)),
                noise_rate=float(obj.get("noise_rate", 0.0)),
                domain_injection_rate=float(obj.get("domain_injection_rate", 0.85)),
                n_generic_train=int(sizes.get("generic_train", 1200)),
                n_domain_train=int(sizes.get("domain_train", 1000)),
                n_domain_test=int(sizes.get("domain_test", 300)),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(
                f"malformed generator spec: {exc}", path=origin
            ) from exc
        return spec.validate()


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"spec is not valid JSON ({exc.msg})", path=str(path), line=exc.lineno
            ) from exc
    return GeneratorSpec.from_dict(obj, origin=str(path))


def default_spec():
    """The shipped frozen spec used by the pinned experiments."""
    ref = importlib.resources.files("senttune.data") / "synth_default.json"
    obj = json.loads(ref.read_text(encoding="utf-8"))
    return GeneratorSpec.from_dict(obj, origin="synth_default.json")


def largest_remainder(priors, total):
    """Integer class counts matching priors exactly in sum."""
    ideal = [p * total for p in priors]
    counts = [int(x) for x in ideal]
    leftover = total - sum(counts)
    order = sorted(
        range(len(priors)), key=lambda i: (-(ideal[i] - counts[i]), i)
    )
    for i in range(leftover):
        counts[order[i % len(order)]] += 1
    return counts


def _other_label(stream, label):
    shift = 1 + int(stream.integers(0, 2))
    return SentimentLabel((int(label) + shift) % 3)


def _gen_text(spec, stream, label, domain, seen):
    for attempt in range(64):
        length = int(stream.integers(spec.length_min, spec.length_max + 1))
        units = []
        if label != SentimentLabel.NEUTRAL:
            n_sent = 1 + int(stream.integers(0, min(3, length - 1)))
            if domain and stream.random() < spec.domain_injection_rate:
                pool = (
                    spec.domain_positive
                    if label == SentimentLabel.POSITIVE
                    else spec.domain_negative
                )
            else:
                pool = (
                    spec.generic_positive
                    if label == SentimentLabel.POSITIVE
                    else spec.generic_negative
                )
            units.extend(
                (pool[int(stream.integers(0, len(pool)))],) for _ in range(n_sent)
            )
        else:
            n_sent = 0
        room = length - n_sent
        while room > 0:
            if room >= 2 and spec.topic_bigrams and stream.random() < 0.3:
                pair = spec.topic_bigrams[
                    int(stream.integers(0, len(spec.topic_bigrams)))
                ]
                units.append(tuple(pair))
                room -= 2
            else:
                word = spec.neutral_fillers[
                    int(stream.integers(0, len(spec.neutral_fillers)))
                ]
                units.append((word,))
                room -= 1
        order = stream.permutation(len(units))
        text = " ".join(w for i in order for w in units[int(i)])
        if text not in seen:
            return text
    # salt with a serial token that no lexicon can score
    base = text
    serial = 0
    while f"{base} entry{serial}" in seen:
        serial += 1
    return f"{base} entry{serial}"


def _gen_dataset(spec, seed, kind, size, split, domain, with_noise, seen):
    stream = rng.stream(seed, "synth", kind)
    counts = largest_remainder(spec.priors, size)
    labels = np.repeat(np.arange(3), counts)
    stream.shuffle(labels)
    examples = []
    for i, raw_label in enumerate(labels):
        truth = SentimentLabel(int(raw_label))
        text = _gen_text(spec, stream, truth, domain, seen)
        seen.add(text)
        stored = truth
        if with_noise and spec.noise_rate > 0 and stream.random() < spec.noise_rate:
            stored = _other_label(stream, truth)
        examples.append(
            LabeledExample(
                make_clean_comment(f"{kind}-{i:05d}", text),
                stored,
                LabelSource.MOCK_LEXICON,
            )
        )
    return LabeledDataset(tuple(examples), split=split)


def synth_corpus(spec, seed):
    """Generate (generic_train, domain_train, domain_test) datasets.

    Texts are unique across all three datasets.  Train sets carry the
    spec's label noise; the test set is noise-free gold.  Identical
    (spec, seed) always reproduces identical corpora.
    """
    spec.validate()
    seen = set()
    generic_train = _gen_dataset(
        spec, seed, "generic_train", spec.n_generic_train,
        "train", domain=False, with_noise=True, seen=seen,
    )
    domain_train = _gen_dataset(
        spec, seed, "domain_train", spec.n_domain_train,
        "train", domain=True, with_noise=True, seen=seen,
    )
    domain_test = _gen_dataset(
        spec, seed, "domain_test", spec.n_domain_test,
        "test", domain=True, with_noise=False, seen=seen,
    )
    return generic_train, domain_train, domain_test


def to_raw_comments(dataset):
    """Strip labels back off, e.g. to feed the ingest→label pipeline."""
    return [
        RawComment(
            id=e.comment.id,
            platform=Platform.SYNTHETIC,
            created_at="1970-01-01T00:00:00Z",
            text=e.comment.text,
        )
        for e in dataset.examples
    ]
