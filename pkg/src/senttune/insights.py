"""Per-sentiment n-gram frequencies and word-cloud SVG export.

Counting runs over each comment's word_tokens (stopword-free, stemmed
at preprocessing time); bigrams join adjacent surviving tokens with a
space.  The cloud renderer sizes entries by the square root of their
count and packs them on an outward spiral with rectangle-overlap
rejection; same table and seed give byte-identical SVG.
"""

import math
from dataclasses import dataclass

from . import rng
from .errors import ValidationError
from .labeling import SentimentLabel

# text-box estimate for a sans-serif glyph at font size 1
CHAR_WIDTH = 0.62
LINE_HEIGHT = 1.18
BOX_PAD = 2.0

_FILLS = {
    SentimentLabel.POSITIVE: ("#1b7837", "#41ab5d", "#78c679", "#238443"),
    SentimentLabel.NEGATIVE: ("#b2182b", "#d6604d", "#ef6548", "#99000d"),
    SentimentLabel.NEUTRAL: ("#2166ac", "#4393c3", "#74a9cf", "#045a8d"),
}


@dataclass(frozen=True)
class FrequencyTable:
    sentiment: SentimentLabel
    counts: dict
    total_comments: int

    def __len__(self):
        return len(self.counts)


def count_ngrams(comments, orders=(1, 2), sentiment=SentimentLabel.NEUTRAL,
                 min_token_len=1):
    """Unigram/bigram counts over a group of same-sentiment comments.

    ``orders`` selects which n-gram lengths to tally.  Tokens shorter
    than ``min_token_len`` are dropped before counting (the word-cloud
    path uses 2 to skip near-empty fragments; the default keeps every
    token so counts match a plain recount).
    """
    orders = set(int(o) for o in orders)
    if not orders or not orders.issubset({1, 2}):
        raise ValidationError(f"orders must be a non-empty subset of {{1, 2}}, got {sorted(orders)}")
    if min_token_len < 1:
        raise ValidationError(f"min_token_len must be >= 1, got {min_token_len}")
    counts = {}
    total = 0
    for comment in comments:
        total += 1
        tokens = [t for t in comment.word_tokens if len(t) >= min_token_len]
        if 1 in orders:
            for token in tokens:
                counts[token] = counts.get(token, 0) + 1
        if 2 in orders:
            for left, right in zip(tokens, tokens[1:]):
                gram = f"{left} {right}"
                counts[gram] = counts.get(gram, 0) + 1
    return FrequencyTable(
        sentiment=SentimentLabel(sentiment), counts=counts, total_comments=total
    )


def top_k(table, k):
    """Most frequent entries, ties broken alphabetically."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    ranked = sorted(table.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def group_by_sentiment(model, comments):
    """Predicted-label grouping; the per-group lists keep input order."""
    from .model import predict

    groups = {label: [] for label in SentimentLabel}
    for comment in comments:
        label, _ = predict(model, comment.text)
        groups[label].append(comment)
    return groups


def text_box(ngram, font_size):
    """Estimated (width, height) of the rendered text, padding included."""
    width = CHAR_WIDTH * font_size * len(ngram) + 2 * BOX_PAD
    height = LINE_HEIGHT * font_size + 2 * BOX_PAD
    return width, height


def _overlaps(box, others):
    x0, y0, x1, y1 = box
    for ox0, oy0, ox1, oy1 in others:
        if x0 < ox1 and ox0 < x1 and y0 < oy1 and oy0 < y1:
            return True
    return False


def _font_size(count, max_count, font_min, font_max):
    # sqrt scaling: counts 100 vs 25 give a 2:1 ratio before clamping
    raw = font_max * math.sqrt(count) / math.sqrt(max_count)
    return min(font_max, max(font_min, raw))


def _place(entries, seed, font_min, font_max):
    if not entries:
        return []
    max_count = entries[0][1]
    stream = rng.stream(seed, "wordcloud")
    placed = []
    boxes = []
    for ngram, count in entries:
        font = _font_size(count, max_count, font_min, font_max)
        w, h = text_box(ngram, font)
        angle0 = float(stream.uniform(0.0, 2.0 * math.pi))
        x = y = 0.0
        for step in range(4000):
            radius = 1.1 * step
            angle = angle0 + 0.35 * step
            x = radius * math.cos(angle)
            y = radius * math.sin(angle)
            box = (x - w / 2, y - h / 2, x + w / 2, y + h / 2)
            if not _overlaps(box, boxes):
                break
        boxes.append((x - w / 2, y - h / 2, x + w / 2, y + h / 2))
        placed.append({
            "ngram": ngram,
            "count": count,
            "font_size": round(font, 2),
            "x": round(x, 2) or 0.0,
            "y": round(y, 2) or 0.0,
        })
    return placed


def render_wordcloud(table, k=60, seed=0, font_min=12.0, font_max=48.0):
    """(svg, sidecar) for the top-k entries of a frequency table.

    The sidecar lists one record per rendered entry with its n-gram,
    count, font size, and anchor coordinates; coordinates and sizes
    are rounded so serialization is stable.
    """
    if font_min <= 0 or font_max < font_min:
        raise ValidationError(
            f"need 0 < font_min <= font_max, got {font_min}, {font_max}"
        )
    entries = top_k(table, k)
    placed = _place(entries, seed, font_min, font_max)
    fills = _FILLS[table.sentiment]
    if placed:
        xs0, ys0, xs1, ys1 = [], [], [], []
        for item in placed:
            w, h = text_box(item["ngram"], item["font_size"])
            xs0.append(item["x"] - w / 2)
            ys0.append(item["y"] - h / 2)
            xs1.append(item["x"] + w / 2)
            ys1.append(item["y"] + h / 2)
        margin = 8.0
        min_x, min_y = min(xs0) - margin, min(ys0) - margin
        width = max(xs1) + margin - min_x
        height = max(ys1) + margin - min_y
    else:
        min_x = min_y = 0.0
        width = height = 1.0
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{min_x:.2f} {min_y:.2f} {width:.2f} {height:.2f}">',
        f'<!-- sentiment: {table.sentiment.word}; entries: {len(placed)} -->',
    ]
    for i, item in enumerate(placed):
        # dominant-baseline keeps the anchor at the box center
        lines.append(
            f'<text x="{item["x"]:.2f}" y="{item["y"]:.2f}" '
            f'font-size="{item["font_size"]:.2f}" fill="{fills[i % len(fills)]}" '
            'font-family="sans-serif" text-anchor="middle" '
            f'dominant-baseline="central">{_escape(item["ngram"])}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n", placed


def _escape(text):
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
