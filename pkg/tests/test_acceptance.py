"""Acceptance gate: one test per shipped guarantee, one scorecard line each.

Every test prints ``acceptance: criterion NN PASS|FAIL`` straight to the
terminal (capture is bypassed), so a plain ``pytest -v`` run shows the
full scorecard.  The heavyweight frozen-seed experiment backing the
transfer-gain, layer-sweep, and scheme-comparison checks runs once per
module and is shared by those three tests.
"""

import contextlib
import json
import socket
import string
import time
from collections import Counter
from dataclasses import replace
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from senttune import autodiff as ad
from senttune import reports, rng
from senttune.backends import OfflineBackend
from senttune.checkpoint import checkpoint_bytes, load_checkpoint, save_checkpoint
from senttune.cli import main
from senttune.corpus import CleanComment, clean_text
from senttune.insights import FrequencyTable, count_ngrams, render_wordcloud, top_k
from senttune.labeling import (
    REJECTED,
    SentimentLabel,
    build_test_set,
    consensus,
    llm_label,
    simulated_expert_stream,
)
from senttune.model import ModelConfig, forward, init_model, param_is_trainable, predict
from senttune.synth import GeneratorSpec, default_spec, synth_corpus
from senttune.tokenizer import build_vocab
from senttune.training import (
    TrainConfig,
    compare_schemes,
    customize,
    evaluate,
    pretrain_base,
    sweep_layers,
)

DATA = Path(__file__).resolve().parent / "data"
REPO = Path(__file__).resolve().parent.parent

EPS = 1e-6
GRAD_TOL = 1e-4


# ------------------------------------------------------------- scorecard

def _emit(config, line):
    cap = config.pluginmanager.getplugin("capturemanager")
    ctx = cap.global_and_fixture_disabled() if cap else contextlib.nullcontext()
    with ctx:
        print(line, flush=True)


@pytest.fixture
def criterion(request):
    """Context manager printing the criterion's PASS/FAIL line."""

    @contextlib.contextmanager
    def gate(num, name):
        try:
            yield
        except Exception:
            _emit(request.config, f"\nacceptance: criterion {num:02d} FAIL  {name}")
            raise
        _emit(request.config, f"\nacceptance: criterion {num:02d} PASS  {name}")

    return gate


# ------------------------------------------------- shared small corpora

def _tiny_spec(**overrides):
    base = dict(
        generic_positive=("good", "fine", "nice"),
        generic_negative=("bad", "awful"),
        domain_positive=("lit", "fire"),
        domain_negative=("mid", "sus"),
        neutral_fillers=("the", "class", "room", "week", "module", "notes"),
        topic_bigrams=(("night", "school"), ("study", "group")),
        length_min=4,
        length_max=9,
        n_generic_train=48,
        n_domain_train=48,
        n_domain_test=24,
    )
    base.update(overrides)
    return GeneratorSpec(**base).validate()


@pytest.fixture(scope="module")
def quick_base():
    """A small pretrained 4-layer base plus its corpora, built once."""
    generic, domain, test = synth_corpus(_tiny_spec(), seed=11)
    mcfg = ModelConfig(
        vocab_size=4, max_len=12, d_model=16, n_heads=2, n_layers=4,
        d_ff=32, dropout_rate=0.0, seed=1,
    )
    tcfg = TrainConfig(
        epochs=3, batch_size=8, learning_rate=5e-3, seed=1, allow_short=True,
    )
    base = pretrain_base(generic, mcfg, tcfg)
    return SimpleNamespace(
        base=base, generic=generic, domain=domain, test=test, tcfg=tcfg,
    )


# ------------------------------------------------ frozen-seed experiment

def _build_frozen():
    start = time.perf_counter()
    spec = default_spec()
    generic_train, domain_train, domain_test = synth_corpus(spec, seed=2024)
    domain_comments = [e.comment for e in domain_train.examples]
    vocab = build_vocab(
        list(generic_train.texts()) + [c.text for c in domain_comments],
        min_freq=1, max_size=20000,
    )
    mcfg = ModelConfig(
        vocab_size=4, max_len=24, d_model=64, n_heads=4, n_layers=4,
        d_ff=128, dropout_rate=0.1, seed=0,
    )
    tcfg = TrainConfig(epochs=10, batch_size=16, learning_rate=1e-3, seed=0)
    base = pretrain_base(generic_train, mcfg, tcfg, vocab=vocab)
    backend = OfflineBackend(spec.full_lexicon(), seed=0)
    labeled, rejects = llm_label(domain_comments, backend)
    sweep = sweep_layers(base, labeled, domain_test, (0, 1, 2, 4), tcfg)
    schemes = compare_schemes(
        base, domain_comments, backend, domain_test,
        replace(tcfg, n_trainable_layers=4),
    )
    return SimpleNamespace(
        sweep=sweep,
        schemes=schemes,
        rejects=rejects,
        n_layers=mcfg.n_layers,
        duration=time.perf_counter() - start,
    )


@pytest.fixture(scope="module")
def frozen():
    try:
        return _build_frozen()
    except Exception as exc:
        return exc


def _need(run):
    if isinstance(run, Exception):
        raise run
    return run


# ------------------------------------------------- 1: gradient correctness

def _numeric_grad(fn, value):
    flat = value.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + EPS
        hi = fn()
        flat[i] = keep - EPS
        lo = fn()
        flat[i] = keep
        grad[i] = (hi - lo) / (2 * EPS)
    return grad.reshape(value.shape)


def _fd_worst(build_loss, tensors):
    """Largest relative error across the watched tensors' gradients."""
    with ad.GradientTape() as tape:
        tape.watch(*tensors)
        value = build_loss()
    grads = tape.gradients(value)
    worst = 0.0
    for t in tensors:
        expected = _numeric_grad(lambda: build_loss().item(), t.data)
        got = grads[t].data
        denom = max(np.abs(expected).max(), 1e-8)
        worst = max(worst, np.abs(got - expected).max() / denom)
    return worst


def test_c01_gradient_correctness(criterion):
    with criterion(1, "gradients: every op plus the full tiny model, rel err < 1e-4"):
        start = time.perf_counter()
        g = np.random.default_rng(17)

        def t(shape, scale=1.0):
            return ad.Tensor(g.normal(size=shape) * scale)

        worst = 0.0
        a, b = t((3, 4)), t((4, 5))
        worst = max(worst, _fd_worst(lambda: ad.sum_all(ad.matmul(a, b)), [a, b]))
        ab, bb = t((2, 3, 4)), t((4, 5))
        worst = max(worst, _fd_worst(lambda: ad.sum_all(ad.matmul(ab, bb)), [ab, bb]))
        q, k = t((2, 2, 3, 4)), t((2, 2, 4, 3))
        worst = max(worst, _fd_worst(lambda: ad.sum_all(ad.matmul(q, k)), [q, k]))

        x, y = t((3, 4)), t((4,))
        for op in (ad.add, ad.sub, ad.mul):
            worst = max(
                worst, _fd_worst(lambda op=op: ad.sum_all(op(x, y)), [x, y])
            )
        worst = max(worst, _fd_worst(lambda: ad.sum_all(ad.add_const(x, 2.5)), [x]))
        worst = max(worst, _fd_worst(lambda: ad.sum_all(ad.scale(x, -1.7)), [x]))

        # reshape/transpose need a weighting downstream so every element
        # of the input sees a distinct gradient
        w26, w43 = t((2, 6)), t((4, 3))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.reshape(x, (2, 6)), w26)), [x, w26]
        ))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.transpose(x, (1, 0)), w43)), [x, w43]
        ))

        s, w35 = t((3, 5)), t((3, 5))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.softmax(s), w35)), [s, w35]
        ))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.gelu(s), w35)), [s, w35]
        ))
        gamma, beta = t((5,)), t((5,))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.layer_norm(s, gamma, beta), w35)),
            [s, gamma, beta, w35],
        ))

        table = t((11, 4))
        ids = np.array([[2, 5, 0], [1, 10, 3]], dtype=np.int64)
        wemb = t((2, 3, 4))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.embedding(table, ids), wemb)),
            [table, wemb],
        ))
        seq, wft = t((2, 3, 4)), t((2, 4))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(ad.mul(ad.first_token(seq), wft)), [seq, wft]
        ))

        # recreating the stream per call fixes the dropout mask, making
        # the finite differences well defined
        dx, wdx = t((4, 6)), t((4, 6))
        worst = max(worst, _fd_worst(
            lambda: ad.sum_all(
                ad.mul(ad.dropout(dx, 0.4, rng.stream(7, "fd-drop")), wdx)
            ),
            [dx, wdx],
        ))

        logits = t((4, 3))
        labels = np.array([0, 2, 1, 1], dtype=np.int64)
        worst = max(worst, _fd_worst(
            lambda: ad.cross_entropy(logits, labels), [logits]
        ))

        config = ModelConfig(
            vocab_size=50, max_len=6, d_model=8, n_heads=2, n_layers=2,
            d_ff=16, dropout_rate=0.0, seed=3,
        ).validate()
        model = init_model(config)
        batch = np.array(
            [[2, 5, 9, 0, 0, 0], [2, 30, 41, 7, 0, 0],
             [2, 3, 0, 0, 0, 0], [2, 11, 12, 13, 14, 15]],
            dtype=np.int64,
        )
        mask = (batch != 0).astype(np.float64)
        targets = np.array([0, 1, 2, 1], dtype=np.int64)
        params = [model.params[name] for name in sorted(model.params)]
        worst = max(worst, _fd_worst(
            lambda: ad.cross_entropy(
                forward(model, batch, mask, train_mode=False), targets
            ),
            params,
        ))

        elapsed = time.perf_counter() - start
        assert worst < GRAD_TOL, f"worst relative error {worst:.2e}"
        assert elapsed < 60.0, f"gradient checks took {elapsed:.1f}s"


# ------------------------------------------------- 2: partition contract

def test_c02_partition_contract(criterion, quick_base):
    with criterion(2, "partition: frozen tensors byte-identical, n=0 a no-op"):
        base = quick_base.base
        L = base.config.n_layers
        for n in (1, (L + 1) // 2, L):
            tcfg = replace(quick_base.tcfg, n_trainable_layers=n)
            custom, _ = customize(base, quick_base.domain, tcfg)
            changed = 0
            for name, param in custom.params.items():
                if param_is_trainable(name, custom.trainable_mask):
                    changed += int(
                        param.data.tobytes() != base.params[name].data.tobytes()
                    )
                else:
                    assert (
                        param.data.tobytes() == base.params[name].data.tobytes()
                    ), f"frozen tensor {name} moved at n={n}"
            assert changed >= 1, f"no trainable tensor moved at n={n}"
        tcfg0 = replace(quick_base.tcfg, n_trainable_layers=0)
        same, report = customize(base, quick_base.domain, tcfg0)
        assert checkpoint_bytes(same) == checkpoint_bytes(base)
        assert report.epoch_losses == ()


# ---------------------------------------------------- 3: overfit sanity

def test_c03_overfit_sanity(criterion):
    with criterion(3, "overfit: 32 examples, 200 epochs, 100% train, loss < 0.01"):
        spec = _tiny_spec(n_domain_train=32)
        generic, domain, _ = synth_corpus(spec, seed=29)
        assert len(domain.examples) == 32
        mcfg = ModelConfig(
            vocab_size=4, max_len=12, d_model=32, n_heads=2, n_layers=2,
            d_ff=64, dropout_rate=0.0, seed=5,
        )
        base = pretrain_base(
            generic, mcfg,
            TrainConfig(epochs=1, batch_size=8, learning_rate=5e-3, seed=5,
                        allow_short=True),
        )
        _, report = customize(
            base, domain,
            TrainConfig(epochs=200, batch_size=8, learning_rate=1e-2, seed=5,
                        n_trainable_layers=mcfg.n_layers),
        )
        assert report.final_train_accuracy == 100.0
        assert report.epoch_losses[-1] < 0.01, (
            f"final loss {report.epoch_losses[-1]:.4f}"
        )


# ------------------------------------------------------ 4: transfer gain

def test_c04_transfer_gain(criterion, frozen):
    with criterion(4, "transfer: customized beats base by >= 10 points in < 10 min"):
        run = _need(frozen)
        assert run.rejects == []
        by_n = {row.n: row.accuracy for row in run.sweep}
        gain = by_n[run.n_layers] - by_n[0]
        assert gain >= 10.0, f"gain was {gain:.1f} points"
        assert run.duration < 600.0, f"experiment took {run.duration:.0f}s"


# -------------------------------------------------- 5: layer-sweep trend

def test_c05_layer_sweep_trend(criterion, frozen, request):
    with criterion(5, "sweep: accuracy rises with trainable depth, table emitted"):
        run = _need(frozen)
        by_n = {row.n: row.accuracy for row in run.sweep}
        assert by_n[run.n_layers] > by_n[1], (
            f"n={run.n_layers} gave {by_n[run.n_layers]:.1f}, "
            f"n=1 gave {by_n[1]:.1f}"
        )
        csv_text, txt_text = reports.sweep_tables(run.sweep, run.n_layers)
        lines = csv_text.splitlines()
        assert lines[0] == "model,trainable_layers,accuracy_pct,improvement_pct"
        assert [line.split(",")[1] for line in lines[1:]] == [
            "0 (0%)", "1 (25%)", "2 (50%)", "4 (100%)",
        ]
        for line in txt_text.rstrip("\n").splitlines():
            _emit(request.config, "    " + line)


# ----------------------------------------------- 6: scheme comparison

def test_c06_scheme_comparison(criterion, frozen):
    with criterion(6, "schemes: labeling real comments beats generating from labels"):
        run = _need(frozen)
        acc = {row.scheme: row.accuracy for row in run.schemes}
        size = {row.scheme: row.train_size for row in run.schemes}
        assert acc["x->y"] > acc["y->x"], (
            f"x->y gave {acc['x->y']:.1f}, y->x gave {acc['y->x']:.1f}"
        )
        assert size["x->y"] == size["y->x"] > 0


# ----------------------------------------------- 7: metric identities

def test_c07_metric_identities(criterion):
    with criterion(7, "metrics: 76.3 -> 91.3 prints 15.0 points, 19.7 relative"):
        assert reports.fmt(reports.improvement_points(76.3, 91.3)) == "15.0"
        assert reports.fmt(reports.improvement_relative(76.3, 91.3)) == "19.7"


# ----------------------------------------------- 8: consensus quotas

def test_c08_consensus_quotas(criterion):
    with criterion(8, "consensus: 3 of 27 triples accepted; quotas fill 100/100/100"):
        labels = list(SentimentLabel)
        accepted = [
            (a, b, c)
            for a in labels
            for b in labels
            for c in labels
            if consensus(a, b, c) is not REJECTED
        ]
        assert len(accepted) == 3
        assert all(a == b == c for a, b, c in accepted)

        spec = replace(
            default_spec(), n_generic_train=3, n_domain_train=900, n_domain_test=3
        )
        _, domain, _ = synth_corpus(spec, seed=7)
        comments = [e.comment for e in domain.examples]
        stream = simulated_expert_stream(
            comments, spec.full_lexicon(), error_rate=0.1, seed=7
        )
        test_set = build_test_set(stream, per_class=100)
        counts = Counter(e.label for e in test_set.examples)
        assert len(test_set.examples) == 300
        assert all(counts[label] == 100 for label in labels)
        assert test_set.split == "test"


# ------------------------------------- 9: preprocessing goldens and fuzz

FUZZ_POOL = (
    string.ascii_letters + string.digits + string.punctuation
    + "     \t\n\r"
    + "áÉñüßçØ中文まン"
    + "😀🔥👍💯🎉"
    + "​﻿́ "
    + "\x00\x07"
    + "“”’…"
)


def test_c09_preprocessing_goldens(criterion):
    with criterion(9, "cleaning: golden fixtures bit-exact, idempotent on 10k strings"):
        rows = [
            json.loads(line)
            for line in (DATA / "clean_golden.jsonl").read_text().splitlines()
            if line.strip()
        ]
        assert len(rows) >= 25
        for row in rows:
            got = clean_text(row["input"])
            assert got == row["expected"], (
                f"clean_text({row['input']!r}) = {got!r}, "
                f"wanted {row['expected']!r}"
            )
        g = np.random.default_rng(90210)
        pool = np.array(list(FUZZ_POOL))
        for length in g.integers(0, 60, size=10_000):
            s = "".join(pool[g.integers(0, len(pool), size=int(length))])
            once = clean_text(s)
            assert clean_text(once) == once, f"not idempotent on {s!r}"


# --------------------------------------- 10: n-gram counts and ordering

def _recount(comments, orders, min_len):
    counts = {}
    for c in comments:
        toks = [t for t in c.word_tokens if len(t) >= min_len]
        if 1 in orders:
            for tok in toks:
                counts[tok] = counts.get(tok, 0) + 1
        if 2 in orders:
            for i in range(len(toks) - 1):
                gram = toks[i] + " " + toks[i + 1]
                counts[gram] = counts.get(gram, 0) + 1
    return counts


def test_c10_ngram_counts(criterion):
    with criterion(10, "n-grams: 100 random corpora match a recount, top-k total order"):
        g = np.random.default_rng(4242)
        pool = ["a", "bb", "ccc", "go", "x", "yy", "night", "run", "fun", "of"]
        order_cycle = [(1,), (2,), (1, 2)]
        for trial in range(100):
            comments = []
            for i in range(int(g.integers(1, 9))):
                toks = tuple(
                    pool[int(j)]
                    for j in g.integers(0, len(pool), size=int(g.integers(0, 8)))
                )
                comments.append(
                    CleanComment(id=f"t{trial}-c{i}", text=" ".join(toks),
                                 word_tokens=toks)
                )
            orders = order_cycle[trial % 3]
            min_len = int(g.integers(1, 3))
            table = count_ngrams(comments, orders=orders, min_token_len=min_len)
            assert table.counts == _recount(comments, set(orders), min_len)

        counts = {f"w{i:02d}": int(g.integers(1, 5)) for i in range(50)}
        table = FrequencyTable(
            sentiment=SentimentLabel.NEUTRAL, counts=counts, total_comments=1
        )
        full = top_k(table, 50)
        assert full == sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        for k in (1, 7, 23, 50, 60):
            assert top_k(table, k) == full[: min(k, 50)]


# -------------------------------------- 11: determinism and persistence

def test_c11_determinism_persistence(criterion, tmp_path):
    with criterion(11, "determinism: reruns byte-identical, save/load prediction-exact"):
        spec = _tiny_spec()
        generic, domain, test = synth_corpus(spec, seed=11)
        mcfg = ModelConfig(
            vocab_size=4, max_len=12, d_model=16, n_heads=2, n_layers=2,
            d_ff=32, dropout_rate=0.1, seed=9,
        )
        tcfg = TrainConfig(
            epochs=2, batch_size=8, learning_rate=5e-3, seed=9,
            allow_short=True, n_trainable_layers=2,
        )
        bases = [pretrain_base(generic, mcfg, tcfg) for _ in range(2)]
        assert checkpoint_bytes(bases[0]) == checkpoint_bytes(bases[1])

        customs = [customize(b, domain, tcfg) for b in bases]
        assert checkpoint_bytes(customs[0][0]) == checkpoint_bytes(customs[1][0])
        assert (
            reports.train_report_json(customs[0][1])
            == reports.train_report_json(customs[1][1])
        )

        evals = [
            evaluate(c, test, baseline=evaluate(b, test), baseline_name="base")
            for (c, _), b in zip(customs, bases)
        ]
        assert reports.eval_report_json(evals[0]) == reports.eval_report_json(evals[1])

        comments = [e.comment for e in domain.examples]
        table = count_ngrams(comments, orders=(1, 2), min_token_len=2)
        clouds = [render_wordcloud(table, k=20, seed=4) for _ in range(2)]
        assert clouds[0] == clouds[1]

        path = tmp_path / "custom.ckpt"
        save_checkpoint(customs[0][0], path)
        loaded = load_checkpoint(path)
        g = np.random.default_rng(31)
        pool = (
            list(spec.full_lexicon())
            + list(spec.neutral_fillers)
            + ["zzz", "😀", "unseenword"]
        )
        for _ in range(100):
            text = " ".join(
                pool[int(j)] for j in g.integers(0, len(pool), size=int(g.integers(1, 10)))
            )
            label_a, probs_a = predict(customs[0][0], text)
            label_b, probs_b = predict(loaded, text)
            assert label_a == label_b
            assert np.array_equal(probs_a, probs_b)


# -------------------------------------------- 12: hermetic end-to-end

def test_c12_hermetic_pipeline(criterion, tmp_path, monkeypatch):
    with criterion(12, "pipeline: end-to-end demo completes with no network"):
        def refuse(*args, **kwargs):
            raise AssertionError("network access attempted during hermetic run")

        monkeypatch.setattr(socket, "create_connection", refuse)
        monkeypatch.setattr(socket, "getaddrinfo", refuse)
        monkeypatch.setattr(socket.socket, "connect", refuse)
        monkeypatch.chdir(tmp_path)

        code = main(["--config", str(REPO / "configs" / "demo.cfg"), "pipeline"])
        assert code == 0

        corpus_dir = tmp_path / "work" / "corpus"
        for name in (
            "generic_train.jsonl", "domain_test.jsonl", "domain_raw.jsonl",
            "domain_comments.jsonl", "labeled_train.jsonl",
        ):
            assert (corpus_dir / name).exists(), name
        ckpt_dir = tmp_path / "work" / "checkpoints"
        assert (ckpt_dir / "base.ckpt").exists()
        assert (ckpt_dir / "custom.ckpt").exists()
        reports_dir = tmp_path / "work" / "reports"
        for name in (
            "eval_base.json", "eval_custom.json", "summary.csv", "summary.txt",
            "wordcloud_positive.svg", "wordcloud_negative.svg",
            "wordcloud_neutral.svg", "manifest.json",
        ):
            assert (reports_dir / name).exists(), name

        manifest = json.loads((reports_dir / "manifest.json").read_text())
        assert manifest["command"] == "pipeline"
        assert manifest["results"]["improvement_points"] > 0
