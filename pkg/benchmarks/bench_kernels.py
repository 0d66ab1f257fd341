#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

Each kernel runs on identical inputs under both backends; outputs must
agree tightly or the run aborts.  A short end-to-end training run at
the bottom shows the whole-pipeline effect of the kernel choice.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 512 --repeats 50
"""

import argparse
import time

import numpy as np

from senttune import kernels
from senttune.kernels import _pykernels as ref
from senttune.model import ModelConfig
from senttune.synth import GeneratorSpec, synth_corpus
from senttune.training import TrainConfig, pretrain_base


def build_cases(rows, dim, vocab):
    """(name, run) pairs; run() returns the kernel's comparable output."""
    g = np.random.default_rng(7)
    x = np.ascontiguousarray(g.normal(size=(rows, dim)))
    gout = np.ascontiguousarray(g.normal(size=(rows, dim)))
    gamma = g.normal(size=dim)
    beta = g.normal(size=dim)
    probs = ref.softmax2d(x)
    _, xhat, inv_std = ref.layernorm2d(x, gamma, beta, 1e-5)
    logits = np.ascontiguousarray(g.normal(size=(rows, 3)))
    labels = g.integers(0, 3, size=rows).astype(np.int64)
    cls_probs = ref.softmax2d(logits)
    ids = g.integers(0, vocab, size=rows).astype(np.int64)
    adam_p = g.normal(size=rows * dim)
    adam_g = g.normal(size=rows * dim)
    adam_m = g.normal(size=rows * dim) * 0.1
    adam_v = np.abs(g.normal(size=rows * dim)) * 0.01

    def adam_run():
        p, m, v = adam_p.copy(), adam_m.copy(), adam_v.copy()
        kernels.adam_update(p, adam_g, m, v, 1e-3, 0.9, 0.999, 1e-8, 3)
        return p

    return [
        ("softmax2d", lambda: kernels.softmax2d(x)),
        ("softmax2d_backward", lambda: kernels.softmax2d_backward(probs, gout)),
        ("layernorm2d", lambda: kernels.layernorm2d(x, gamma, beta, 1e-5)),
        ("layernorm2d_backward",
         lambda: kernels.layernorm2d_backward(gout, xhat, inv_std, gamma)),
        ("gelu", lambda: kernels.gelu(x.ravel())),
        ("gelu_backward", lambda: kernels.gelu_backward(x.ravel(), gout.ravel())),
        ("cross_entropy2d", lambda: kernels.cross_entropy2d(logits, labels)),
        ("cross_entropy2d_backward",
         lambda: kernels.cross_entropy2d_backward(cls_probs, labels, 1.0 / rows)),
        ("adam_update", adam_run),
        ("embedding_backward", lambda: kernels.embedding_backward(ids, gout, vocab)),
    ]


def as_arrays(out):
    if isinstance(out, tuple):
        return [np.asarray(o) for o in out]
    return [np.asarray(out)]


def check_agreement(name, run, backends):
    outs = []
    for backend in backends:
        kernels.use(backend)
        outs.append(as_arrays(run()))
    for a, b in zip(*outs):
        if not np.allclose(a, b, rtol=1e-12, atol=1e-12):
            worst = np.abs(a - b).max()
            raise SystemExit(
                f"{name}: backends disagree (max abs diff {worst:.3e})"
            )


def best_of(run, repeats):
    run()  # warmup
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        run()
        best = min(best, time.perf_counter() - start)
    return best


def training_run():
    spec = GeneratorSpec(
        generic_positive=("good", "fine", "nice"),
        generic_negative=("bad", "awful"),
        domain_positive=("lit", "fire"),
        domain_negative=("mid", "sus"),
        neutral_fillers=("the", "class", "room", "week", "module", "notes"),
        topic_bigrams=(("night", "school"), ("study", "group")),
        length_min=4, length_max=9,
        n_generic_train=120, n_domain_train=3, n_domain_test=3,
    ).validate()
    generic, _, _ = synth_corpus(spec, seed=11)
    mcfg = ModelConfig(
        vocab_size=4, max_len=12, d_model=32, n_heads=2, n_layers=2,
        d_ff=64, dropout_rate=0.1, seed=0,
    )
    tcfg = TrainConfig(
        epochs=3, batch_size=16, learning_rate=1e-3, seed=0, allow_short=True,
    )
    return lambda: pretrain_base(generic, mcfg, tcfg)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=256)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--vocab", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    backends = kernels.available_backends()
    if len(backends) < 2:
        print(f"only the {backends[0]} backend is built; nothing to compare")
        return
    previous = kernels.use(backends[0])

    cases = build_cases(args.rows, args.dim, args.vocab)
    print(f"rows={args.rows} dim={args.dim} vocab={args.vocab} "
          f"best of {args.repeats}\n")
    width = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    print(header + f"{'speedup':>10}")
    for name, run in cases:
        check_agreement(name, run, backends)
        times = []
        for backend in backends:
            kernels.use(backend)
            times.append(best_of(run, args.repeats))
        cells = "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        print(f"{name:<{width}}  {cells}{times[-1] / times[0]:>9.1f}x")

    run = training_run()
    times = []
    for backend in backends:
        kernels.use(backend)
        times.append(best_of(run, max(1, args.repeats // 10)))
    cells = "".join(f"{t:>11.2f}s" for t in times)
    print(f"\n{'3-epoch pretrain':<{width}}  {cells}"
          f"{times[-1] / times[0]:>9.1f}x")
    kernels.use(previous)


if __name__ == "__main__":
    main()
