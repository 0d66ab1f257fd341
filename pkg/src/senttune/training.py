"""Pretraining, customization, evaluation, and the two sensitivity runs.

Customization follows the partition contract: only the parameters of
the top-n encoder blocks (plus head, plus embeddings at n = L) receive
gradients or optimizer updates; everything frozen stays bit-identical.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import rng
from .autodiff import GradientTape, cross_entropy
from .errors import ContaminationError, ValidationError
from .labeling import (
    LabeledDataset,
    LabelSource,
    SentimentLabel,
    llm_generate,
    llm_label,
)
from .model import (
    clone_model,
    forward,
    init_model,
    set_trainable,
    trainable_params,
)
from .optim import Adam
from .synth import largest_remainder
from .tokenizer import build_vocab, encode_batch

EVAL_BATCH = 64


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 5e-4
    n_trainable_layers: Optional[int] = None
    seed: int = 0
    shuffle: bool = True
    allow_short: bool = False

    def validate(self):
        problems = []
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        elif self.epochs < 10 and not self.allow_short:
            problems.append(
                f"epochs {self.epochs} below the at-least-ten policy; "
                "set allow_short to override"
            )
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            problems.append(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if self.n_trainable_layers is not None and self.n_trainable_layers < 0:
            problems.append(
                f"n_trainable_layers must be >= 0, got {self.n_trainable_layers}"
            )
        if problems:
            raise ValidationError("invalid train config: " + "; ".join(problems))
        return self

    def to_dict(self):
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "n_trainable_layers": self.n_trainable_layers,
            "seed": self.seed,
            "shuffle": self.shuffle,
            "allow_short": self.allow_short,
        }


@dataclass(frozen=True)
class TrainReport:
    epoch_losses: tuple
    final_train_accuracy: float
    duration_seconds: float
    config: dict
    dataset_fingerprint: str

    def to_dict(self, include_timing=False):
        """JSON form; wall-clock timing is opt-in so written reports
        stay byte-reproducible."""
        out = {
            "epoch_losses": list(self.epoch_losses),
            "final_train_accuracy": self.final_train_accuracy,
            "config": self.config,
            "dataset_fingerprint": self.dataset_fingerprint,
        }
        if include_timing:
            out["duration_seconds"] = self.duration_seconds
        return out


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: tuple
    precision: tuple
    recall: tuple
    n_examples: int
    test_fingerprint: str
    baseline_name: Optional[str] = None
    baseline_accuracy: Optional[float] = None

    @property
    def improvement_points(self):
        if self.baseline_accuracy is None:
            return None
        return self.accuracy - self.baseline_accuracy

    @property
    def improvement_relative(self):
        if self.baseline_accuracy is None:
            return None
        return (self.accuracy - self.baseline_accuracy) / self.baseline_accuracy * 100.0

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "confusion": [list(row) for row in self.confusion],
            "precision": list(self.precision),
            "recall": list(self.recall),
            "n_examples": self.n_examples,
            "test_fingerprint": self.test_fingerprint,
            "baseline_name": self.baseline_name,
            "baseline_accuracy": self.baseline_accuracy,
            "improvement_points": self.improvement_points,
            "improvement_relative": self.improvement_relative,
        }


@dataclass(frozen=True)
class SweepRow:
    n: int
    accuracy: float
    improvement_relative: float


@dataclass(frozen=True)
class SchemeRow:
    scheme: str
    accuracy: float
    improvement_relative: Optional[float]
    train_size: Optional[int] = None


def _encode_dataset(model, dataset):
    texts = [e.comment.text for e in dataset.examples]
    ids, mask = encode_batch(texts, model.vocab, model.config.max_len)
    labels = np.array([int(e.label) for e in dataset.examples], dtype=np.int64)
    return ids, mask, labels


def predict_ids(model, ids, mask):
    """Deterministic argmax class predictions, batched for memory."""
    out = []
    for start in range(0, ids.shape[0], EVAL_BATCH):
        logits = forward(
            model, ids[start:start + EVAL_BATCH], mask[start:start + EVAL_BATCH],
            train_mode=False,
        )
        out.append(np.argmax(logits.data, axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def _train_accuracy(model, ids, mask, labels):
    return float(np.mean(predict_ids(model, ids, mask) == labels) * 100.0)


def _fit(model, dataset, tcfg):
    """Adam-train ``model`` in place on ``dataset``; returns a TrainReport."""
    started = time.perf_counter()
    ids, mask, labels = _encode_dataset(model, dataset)
    params = trainable_params(model)
    if not params:
        raise ValidationError("no trainable parameters under the current partition")
    optimizer = Adam(lr=tcfg.learning_rate)
    n = ids.shape[0]
    epoch_losses = []
    for epoch in range(tcfg.epochs):
        order = np.arange(n)
        if tcfg.shuffle:
            rng.stream(tcfg.seed, "shuffle", epoch).shuffle(order)
        total = 0.0
        for step, start in enumerate(range(0, n, tcfg.batch_size)):
            batch = order[start:start + tcfg.batch_size]
            dropout_rng = rng.stream(tcfg.seed, "dropout", epoch, step)
            with GradientTape() as tape:
                tape.watch(*params.values())
                logits = forward(
                    model, ids[batch], mask[batch],
                    train_mode=True, dropout_rng=dropout_rng,
                )
                loss = cross_entropy(logits, labels[batch])
            grads = tape.gradients(loss)
            optimizer.step(params, grads)
            total += loss.item() * len(batch)
        epoch_losses.append(total / n)
    return TrainReport(
        epoch_losses=tuple(epoch_losses),
        final_train_accuracy=_train_accuracy(model, ids, mask, labels),
        duration_seconds=time.perf_counter() - started,
        config=tcfg.to_dict(),
        dataset_fingerprint=dataset.fingerprint,
    )


def _check_trainable_dataset(dataset):
    if dataset.split != "train":
        raise ValidationError(
            f"training requires a train split, got {dataset.split!r}"
        )
    if len(dataset.examples) == 0:
        raise ValidationError("training dataset is empty")
    if any(e.source == LabelSource.EXPERT_CONSENSUS for e in dataset.examples):
        raise ValidationError(
            "expert-consensus examples are test-only and must never be trained on"
        )


def pretrain_base(generic_train, config, tcfg, vocab=None):
    """Train a Base model from random init on the generic corpus.

    When no vocabulary is passed, one is built from the training texts;
    either way config.vocab_size is derived from the vocabulary used.
    The returned model carries the vocabulary and is checkpoint-ready.
    """
    _check_trainable_dataset(generic_train)
    tcfg.validate()
    if vocab is None:
        vocab = build_vocab(
            generic_train.texts(), min_freq=1, max_size=20000
        )
    config = replace(config, vocab_size=vocab.size).validate()
    model = init_model(config)
    model.vocab = vocab
    report = _fit(model, generic_train, tcfg)
    model.meta = {
        "kind": "base",
        "seed": tcfg.seed,
        "epochs": tcfg.epochs,
        "dataset_fingerprint": generic_train.fingerprint,
        "train_fingerprints": [generic_train.fingerprint],
        "epoch_losses": list(report.epoch_losses),
        "final_train_accuracy": report.final_train_accuracy,
    }
    model._last_report = report
    return model


def customize(base, dataset, tcfg):
    """Adapt a Base model to domain data under the layer partition.

    Returns (model, report).  n = 0 is the Base case: the very same
    model object comes back untouched with a zero-epoch report.  For
    n >= 1 the base is cloned, the partition applied, and only
    trainable tensors ever change.
    """
    tcfg.validate()
    n = tcfg.n_trainable_layers
    if n is None:
        raise ValidationError("customize requires n_trainable_layers to be set")
    if base.vocab is None:
        raise ValidationError(
            "base model has no vocabulary; cannot encode the dataset"
        )
    _check_trainable_dataset(dataset)
    if n == 0:
        report = TrainReport(
            epoch_losses=(),
            final_train_accuracy=float("nan"),
            duration_seconds=0.0,
            config=tcfg.to_dict(),
            dataset_fingerprint=dataset.fingerprint,
        )
        return base, report

    work = set_trainable(clone_model(base), n)
    report = _fit(work, dataset, tcfg)
    work.meta = {
        **base.meta,
        "kind": "customized",
        "n_trainable_layers": n,
        "seed": tcfg.seed,
        "epochs": tcfg.epochs,
        "dataset_fingerprint": dataset.fingerprint,
        "train_fingerprints": list(base.meta.get("train_fingerprints", []))
        + [dataset.fingerprint],
        "epoch_losses": list(report.epoch_losses),
        "final_train_accuracy": report.final_train_accuracy,
    }
    return work, report


def evaluate(model, test, baseline=None, baseline_name=None):
    """Score a model on a gold test set; deterministic, dropout off.

    With a baseline report the improvement metrics become available:
    points = acc − base, relative = (acc − base) / base × 100.
    """
    if test.split != "test":
        raise ValidationError(f"evaluation requires a test split, got {test.split!r}")
    if len(test.examples) == 0:
        raise ValidationError("test set is empty")
    trained_on = set(model.meta.get("train_fingerprints", []))
    if test.fingerprint in trained_on:
        raise ContaminationError(
            "test set fingerprint matches a dataset this model was trained on"
        )
    ids, mask, labels = _encode_dataset(model, test)
    predicted = predict_ids(model, ids, mask)
    confusion = np.zeros((3, 3), dtype=np.int64)
    for truth, guess in zip(labels, predicted):
        confusion[truth, guess] += 1
    with np.errstate(invalid="ignore"):
        precision = np.where(
            confusion.sum(axis=0) > 0,
            np.diag(confusion) / np.maximum(confusion.sum(axis=0), 1),
            0.0,
        )
        recall = np.where(
            confusion.sum(axis=1) > 0,
            np.diag(confusion) / np.maximum(confusion.sum(axis=1), 1),
            0.0,
        )
    accuracy = float(np.trace(confusion) / len(test.examples) * 100.0)
    return EvalReport(
        accuracy=accuracy,
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
        precision=tuple(float(v) for v in precision),
        recall=tuple(float(v) for v in recall),
        n_examples=len(test.examples),
        test_fingerprint=test.fingerprint,
        baseline_name=baseline_name if baseline is not None else None,
        baseline_accuracy=baseline.accuracy if baseline is not None else None,
    )


def assert_disjoint(train_ds, test_ds):
    """Train/test must share no comment ids and no texts."""
    train_ids = {e.comment.id for e in train_ds.examples}
    test_ids = {e.comment.id for e in test_ds.examples}
    shared_ids = train_ids & test_ids
    if shared_ids:
        raise ContaminationError(
            f"{len(shared_ids)} comment ids appear in both train and test"
        )
    train_texts = {e.comment.text for e in train_ds.examples}
    test_texts = {e.comment.text for e in test_ds.examples}
    shared_texts = train_texts & test_texts
    if shared_texts:
        raise ContaminationError(
            f"{len(shared_texts)} comment texts appear in both train and test"
        )


def sweep_layers(base, dataset, test, ns, tcfg):
    """One customize+evaluate per n, all from the same base and seed.

    Returns rows sorted ascending by n with accuracy and improvement
    relative to the n=0 Base evaluation.
    """
    L = base.config.n_layers
    ns = sorted(set(int(n) for n in ns))
    if any(n < 0 or n > L for n in ns):
        raise ValidationError(f"sweep ns {ns} outside [0, {L}]")
    assert_disjoint(dataset, test)
    base_eval = evaluate(base, test)
    rows = []
    for n in ns:
        try:
            model, _ = customize(base, dataset, replace(tcfg, n_trainable_layers=n))
            report = evaluate(model, test, baseline=base_eval, baseline_name="base")
        except Exception as exc:
            if hasattr(exc, "add_note"):
                exc.add_note(f"while sweeping n={n}")
            raise
        improvement = report.improvement_relative if n > 0 else 0.0
        rows.append(
            SweepRow(n=n, accuracy=report.accuracy, improvement_relative=improvement)
        )
    return rows


def compare_schemes(base, comments, backend, test, tcfg):
    """Head-to-head of the two data schemes, same budget each.

    Builds one training set by labeling ``comments`` through the
    backend and one by generating the same number of comments from
    labels, customizes the base identically on each, and returns rows
    for Base, y→x̂, and x→ŷ in that order.
    """
    comments = list(comments)
    if not comments:
        raise ValidationError("compare_schemes needs a non-empty comment sequence")
    labeled, rejects = llm_label(comments, backend)
    if len(labeled.examples) == 0:
        raise ValidationError(
            f"labeling produced no examples ({len(rejects)} rejects)"
        )
    target = len(labeled.examples)
    per_class = largest_remainder((1 / 3, 1 / 3, 1 / 3), target)
    generated = []
    for label, quota in zip(SentimentLabel, per_class):
        if quota == 0:
            continue
        examples, shortfall = llm_generate(label, quota, backend)
        if shortfall:
            raise ValidationError(
                f"generator delivered {quota - shortfall} of {quota} "
                f"{label.word} comments"
            )
        generated.extend(examples)
    generated_ds = LabeledDataset(tuple(generated), split="train")
    if len(generated_ds.examples) != len(labeled.examples):
        raise ValidationError(
            f"scheme sets differ in size: {len(labeled.examples)} labeled vs "
            f"{len(generated_ds.examples)} generated"
        )
    assert_disjoint(labeled, test)
    assert_disjoint(generated_ds, test)

    base_eval = evaluate(base, test)
    rows = [
        SchemeRow(
            scheme="base",
            accuracy=base_eval.accuracy,
            improvement_relative=None,
            train_size=0,
        )
    ]
    for scheme, ds in (("y->x", generated_ds), ("x->y", labeled)):
        model, _ = customize(base, ds, tcfg)
        report = evaluate(model, test, baseline=base_eval, baseline_name="base")
        rows.append(
            SchemeRow(
                scheme=scheme,
                accuracy=report.accuracy,
                improvement_relative=report.improvement_relative,
                train_size=len(ds.examples),
            )
        )
    return rows
