"""Result tables and report serialization.

Three table shapes are emitted, one per experiment: the customization
summary (base vs adapted accuracy, absolute points), the layer sweep
(accuracy per trainable-layer count, relative percent), and the
labeling-scheme comparison (relative percent).  Each renders as CSV
and as an aligned text table; train and eval reports serialize to
JSON.  All numeric cells print with one decimal so stored accuracies
round-trip exactly as displayed.
"""

import json

from .errors import ValidationError

CUSTOMIZATION_HEADER = (
    "model",
    "base_accuracy_pct",
    "customized_accuracy_pct",
    "improvement_points",
    "time_min",
)
SWEEP_HEADER = ("model", "trainable_layers", "accuracy_pct", "improvement_pct")
SCHEME_HEADER = ("scheme", "accuracy_pct", "improvement_pct")

_SCHEME_NAMES = {
    "base": "Base",
    "y->x": "LLM y->x (generate from label)",
    "x->y": "LLM x->y (label real comments)",
}


def improvement_points(base_accuracy, accuracy):
    """Absolute gain in percentage points."""
    return accuracy - base_accuracy


def improvement_relative(base_accuracy, accuracy):
    """Gain relative to the base accuracy, in percent."""
    if base_accuracy == 0:
        raise ValidationError("relative improvement undefined for base accuracy 0")
    return (accuracy - base_accuracy) / base_accuracy * 100.0


def fmt(value):
    # one decimal everywhere; missing cells print as a dash
    if value is None:
        return "-"
    return f"{float(value):.1f}"


def render_csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = [str(c) for c in row]
        for cell in cells:
            if "," in cell or "\n" in cell or '"' in cell:
                raise ValidationError(f"cell {cell!r} needs quoting; not supported")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_text(header, rows):
    """Aligned monospace table with a dashed rule under the header."""
    table = [tuple(str(c) for c in row) for row in rows]
    widths = [len(h) for h in header]
    for row in table:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(header), line(tuple("-" * w for w in widths))]
    out.extend(line(row) for row in table)
    return "\n".join(out) + "\n"


def customization_rows(model_name, base_eval, custom_eval, minutes=None):
    """Summary-table rows: base vs customized accuracy, absolute points."""
    points = improvement_points(base_eval.accuracy, custom_eval.accuracy)
    return [
        (
            model_name,
            fmt(base_eval.accuracy),
            fmt(custom_eval.accuracy),
            fmt(points),
            "-" if minutes is None else str(int(round(minutes))),
        )
    ]


def sweep_rows(rows, n_layers):
    """Sweep-table rows; the layer cell reads "n (pct%)" of the stack.

    The n = 0 row is the Base model; its improvement cell prints as a
    dash (the stored value is 0.0, recoverable from the accuracies).
    """
    out = []
    for row in sorted(rows, key=lambda r: r.n):
        pct = round(100 * row.n / n_layers)
        label = "Base" if row.n == 0 else "Customized"
        improvement = fmt(row.improvement_relative) if row.n > 0 else "-"
        out.append(
            (label, f"{row.n} ({pct}%)", fmt(row.accuracy), improvement)
        )
    return out


def scheme_rows(rows):
    out = []
    for row in rows:
        name = _SCHEME_NAMES.get(row.scheme, row.scheme)
        out.append((name, fmt(row.accuracy), fmt(row.improvement_relative)))
    return out


def train_report_json(report, include_timing=False):
    """Canonical JSON for a TrainReport; timing is opt-in so the bytes
    are reproducible across runs."""
    return json.dumps(
        report.to_dict(include_timing=include_timing),
        indent=2,
        sort_keys=True,
    ) + "\n"


def eval_report_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def summary_tables(model_name, base_eval, custom_eval, minutes=None):
    rows = customization_rows(model_name, base_eval, custom_eval, minutes)
    return (
        render_csv(CUSTOMIZATION_HEADER, rows),
        render_text(CUSTOMIZATION_HEADER, rows),
    )


def sweep_tables(rows, n_layers):
    cells = sweep_rows(rows, n_layers)
    return render_csv(SWEEP_HEADER, cells), render_text(SWEEP_HEADER, cells)


def scheme_tables(rows):
    cells = scheme_rows(rows)
    return render_csv(SCHEME_HEADER, cells), render_text(SCHEME_HEADER, cells)
