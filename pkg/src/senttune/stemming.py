"""Deterministic suffix-stripping stemmer used as the lemmatization step.

The classic measure-based machinery (vowel/consonant classification,
the m count, the cvc test) lives here; the plain suffix-replacement
rules for the table-driven passes ship in ``data/stem_rules.tsv`` so the
rule set is versioned and inspectable without touching code.
"""

import functools
import importlib.resources

from .errors import ParseError, ValidationError

_VOWELS = frozenset("aeiou")
_STEPS = ("1a", "2", "3", "4")
_CONDITIONS = frozenset(("-", "m>0", "m>1", "m>1&st"))


def _is_consonant(word, i):
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # y after a consonant acts as a vowel ("happy"), else consonant
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem):
    """Count vowel-run to consonant-run transitions."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _contains_vowel(stem):
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word):
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word):
    n = len(word)
    return (
        n >= 3
        and _is_consonant(word, n - 3)
        and not _is_consonant(word, n - 2)
        and _is_consonant(word, n - 1)
        and word[-1] not in "wxy"
    )


def _condition_holds(cond, stem):
    if cond == "-":
        return True
    if cond == "m>0":
        return _measure(stem) > 0
    if cond == "m>1":
        return _measure(stem) > 1
    if cond == "m>1&st":
        return _measure(stem) > 1 and stem[-1:] in ("s", "t")
    raise ValidationError(f"unknown stem rule condition {cond!r}")


def load_rules(path=None):
    """Parse a rule table into {step: [(suffix, replacement, condition)]}.

    Columns are step, suffix, replacement, condition separated by tabs;
    ``-`` denotes an empty replacement; ``#`` starts a comment line.
    """
    if path is None:
        ref = importlib.resources.files("senttune.data") / "stem_rules.tsv"
        text = ref.read_text(encoding="utf-8")
        origin = "stem_rules.tsv"
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        origin = str(path)

    rules = {step: [] for step in _STEPS}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(
                f"expected 4 tab-separated fields, got {len(parts)}",
                path=origin,
                line=lineno,
            )
        step, suffix, repl, cond = (p.strip() for p in parts)
        if step not in _STEPS:
            raise ParseError(f"unknown step {step!r}", path=origin, line=lineno)
        if not suffix.isalpha() or suffix != suffix.lower():
            raise ParseError(
                f"suffix must be lowercase letters, got {suffix!r}",
                path=origin,
                line=lineno,
            )
        if cond not in _CONDITIONS:
            raise ParseError(f"unknown condition {cond!r}", path=origin, line=lineno)
        rules[step].append((suffix, "" if repl == "-" else repl, cond))
    for step in _STEPS:
        if not rules[step]:
            raise ParseError(f"rule table has no rules for step {step}", path=origin)
    return rules


class Stemmer:
    """Applies the suffix passes in fixed order; pure and reusable."""

    def __init__(self, rules=None):
        self._rules = load_rules() if rules is None else rules

    def _apply_table(self, word, step):
        best = None
        for suffix, repl, cond in self._rules[step]:
            if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
                best = (suffix, repl, cond)
        if best is None:
            return word
        suffix, repl, cond = best
        stem = word[: len(word) - len(suffix)]
        # longest matching suffix decides; a failed condition ends the step
        if _condition_holds(cond, stem):
            return stem + repl
        return word

    def _step1b(self, word):
        if word.endswith("eed"):
            if _measure(word[:-3]) > 0:
                return word[:-1]
            return word
        for suffix in ("ed", "ing"):
            if word.endswith(suffix):
                stem = word[: len(word) - len(suffix)]
                if _contains_vowel(stem):
                    return self._step1b_repair(stem)
                return word
        return word

    def _step1b_repair(self, stem):
        if stem.endswith(("at", "bl", "iz")):
            return stem + "e"
        if _ends_double_consonant(stem) and stem[-1] not in "lsz":
            return stem[:-1]
        if _measure(stem) == 1 and _ends_cvc(stem):
            return stem + "e"
        return stem

    def _step1c(self, word):
        if word.endswith("y") and _contains_vowel(word[:-1]):
            return word[:-1] + "i"
        return word

    def _step5a(self, word):
        if not word.endswith("e"):
            return word
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
        return word

    def _step5b(self, word):
        if word.endswith("ll") and _measure(word[:-1]) > 1:
            return word[:-1]
        return word

    def stem(self, word):
        if len(word) <= 2:
            return word
        word = self._apply_table(word, "1a")
        word = self._step1b(word)
        word = self._step1c(word)
        word = self._apply_table(word, "2")
        word = self._apply_table(word, "3")
        word = self._apply_table(word, "4")
        word = self._step5a(word)
        word = self._step5b(word)
        return word


@functools.lru_cache(maxsize=1)
def default_stemmer():
    return Stemmer()


def stem(word):
    """Stem one lowercase word with the shipped rule table."""
    return default_stemmer().stem(word)
