"""Command-line surface tying the pipeline together.

Every command reads an optional INI config (flags win over file
values), writes its artifacts, and drops a manifest JSON next to them
recording the config echo, seeds, input hashes, and outputs, so any
artifact can be regenerated from its manifest.  Runs are hermetic
unless the http labeler backend is explicitly configured.

Exit codes: 0 success, 1 I/O or config or parse failure, 2 validation
failure, 3 labeler-backend failure.
"""

import argparse
import hashlib
import json
import os
import sys
from importlib import resources

from . import __version__, reports
from .backends import HttpBackend, OfflineBackend
from .checkpoint import load_checkpoint, save_checkpoint
from .config import load_config
from .corpus import (
    ingest,
    load_clean_jsonl,
    preprocess,
    save_clean_jsonl,
    save_raw_jsonl,
)
from .errors import (
    BackendError,
    SentTuneError,
    ValidationError,
)
from .insights import count_ngrams, group_by_sentiment, render_wordcloud
from .labeling import (
    LabeledDataset,
    SentimentLabel,
    llm_generate,
    llm_label,
    load_dataset,
    load_lexicon,
    save_dataset,
)
from .synth import default_spec, load_spec, synth_corpus, to_raw_comments
from .tokenizer import build_vocab
from .training import (
    compare_schemes,
    customize,
    evaluate,
    pretrain_base,
    sweep_layers,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_BACKEND = 3


def _sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _write_text(path, text):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_manifest(path, command, cfg, inputs, outputs, results=None):
    """Reproducibility record: config echo, input hashes, output names."""
    data = {
        "command": command,
        "package_version": __version__,
        "config": cfg.to_dict(),
        "inputs": {
            name: {"path": str(p), "sha256": _sha256_file(p)}
            for name, p in sorted(inputs.items())
        },
        "outputs": sorted(os.path.basename(str(o)) for o in outputs),
        "results": results or {},
    }
    _write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _manifest_for(output_path):
    return str(output_path) + ".manifest.json"


def _builtin_lexicon(which):
    ref = resources.files("senttune.data") / f"lexicon_{which}.tsv"
    with resources.as_file(ref) as path:
        return load_lexicon(path)


def _read_stopwords(path):
    out = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                out.add(word)
    return frozenset(out)


def _make_backend(cfg, lexicon_path=None, seed=0):
    kind = cfg.get("labeler", "backend")
    if kind == "http":
        return HttpBackend(
            cfg.get("labeler", "endpoint"),
            model=cfg.get("labeler", "model"),
            timeout=cfg.get("labeler", "timeout"),
        )
    lexicon_path = lexicon_path or cfg.get("paths", "lexicon")
    if lexicon_path:
        lexicon = load_lexicon(lexicon_path)
    else:
        lexicon = _builtin_lexicon("domain")
    return OfflineBackend(lexicon, seed=seed)


def _parse_label(word):
    try:
        return SentimentLabel[word.upper()]
    except KeyError:
        raise ValidationError(
            f"label must be positive, negative, or neutral, got {word!r}"
        ) from None


def _model_name(path):
    return os.path.splitext(os.path.basename(str(path)))[0]


# ---------------------------------------------------------------- commands


def cmd_ingest(args, cfg):
    result = ingest(args.input, format=args.format)
    _ensure_parent(args.output)
    save_raw_jsonl(result, args.output)
    _write_manifest(
        _manifest_for(args.output), "ingest", cfg,
        {"raw": args.input}, [args.output],
        {"ingested": len(result), "skipped": result.skipped},
    )
    print(f"ingested {len(result)} comments, skipped {result.skipped} -> {args.output}")
    return EXIT_OK


def cmd_preprocess(args, cfg):
    raw = ingest(args.input, format=args.format)
    stopwords_path = args.stopwords or cfg.get("paths", "stopwords")
    stop = _read_stopwords(stopwords_path) if stopwords_path else None
    corpus = preprocess(raw, stopwords=stop, keep_emoji=args.keep_emoji)
    _ensure_parent(args.output)
    save_clean_jsonl(corpus, args.output)
    inputs = {"raw": args.input}
    if stopwords_path:
        inputs["stopwords"] = stopwords_path
    _write_manifest(
        _manifest_for(args.output), "preprocess", cfg,
        inputs, [args.output],
        {"kept": len(corpus), "dropped": len(raw) - len(corpus)},
    )
    print(f"preprocessed {len(raw)} -> {len(corpus)} comments -> {args.output}")
    return EXIT_OK


def cmd_synth(args, cfg):
    spec_path = args.spec or cfg.get("paths", "synth_spec")
    spec = load_spec(spec_path) if spec_path else default_spec()
    seed = args.seed if args.seed is not None else cfg.get("synth", "seed")
    generic_train, domain_train, domain_test = synth_corpus(spec, seed)
    os.makedirs(args.outdir, exist_ok=True)
    paths = {}
    for name, ds in (
        ("generic_train", generic_train),
        ("domain_train", domain_train),
        ("domain_test", domain_test),
    ):
        paths[name] = os.path.join(args.outdir, f"{name}.jsonl")
        save_dataset(ds, paths[name])
    inputs = {"spec": spec_path} if spec_path else {}
    _write_manifest(
        os.path.join(args.outdir, "manifest.json"), "synth", cfg,
        inputs, list(paths.values()),
        {
            "seed": seed,
            "fingerprints": {
                "generic_train": generic_train.fingerprint,
                "domain_train": domain_train.fingerprint,
                "domain_test": domain_test.fingerprint,
            },
        },
    )
    print(
        f"synthesized {len(generic_train)} generic train, "
        f"{len(domain_train)} domain train, {len(domain_test)} domain test "
        f"-> {args.outdir}"
    )
    return EXIT_OK


def cmd_label(args, cfg):
    comments = load_clean_jsonl(args.input)
    backend = _make_backend(cfg, lexicon_path=args.lexicon, seed=args.seed)
    dataset, rejects = llm_label(
        comments, backend,
        retries=cfg.get("labeler", "retries"),
        max_workers=cfg.get("labeler", "max_workers"),
    )
    _ensure_parent(args.output)
    save_dataset(dataset, args.output)
    _write_manifest(
        _manifest_for(args.output), "label", cfg,
        {"comments": args.input}, [args.output],
        {
            "labeled": len(dataset),
            "rejected": len(rejects),
            "fingerprint": dataset.fingerprint,
        },
    )
    print(f"labeled {len(dataset)} comments, rejected {len(rejects)} -> {args.output}")
    return EXIT_OK


def cmd_generate(args, cfg):
    label = _parse_label(args.label)
    backend = _make_backend(cfg, lexicon_path=args.lexicon, seed=args.seed)
    examples, shortfall = llm_generate(
        label, args.count, backend, retries=cfg.get("labeler", "retries")
    )
    if shortfall:
        raise BackendError(
            f"generator delivered {args.count - shortfall} of {args.count} "
            f"{label.word} comments"
        )
    dataset = LabeledDataset(tuple(examples), split="train")
    _ensure_parent(args.output)
    save_dataset(dataset, args.output)
    _write_manifest(
        _manifest_for(args.output), "generate", cfg,
        {}, [args.output],
        {"label": label.word, "count": len(dataset), "fingerprint": dataset.fingerprint},
    )
    print(f"generated {len(dataset)} {label.word} comments -> {args.output}")
    return EXIT_OK


def _train_overrides(args):
    out = {}
    if getattr(args, "epochs", None) is not None:
        out["epochs"] = args.epochs
    if getattr(args, "batch_size", None) is not None:
        out["batch_size"] = args.batch_size
    if getattr(args, "lr", None) is not None:
        out["learning_rate"] = args.lr
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if getattr(args, "allow_short", False):
        out["allow_short"] = True
    return out


def cmd_pretrain(args, cfg):
    train_ds = load_dataset(args.train, split="train")
    tcfg = cfg.train_config(**_train_overrides(args))
    vocab = None
    if args.vocab_from:
        # widen the vocabulary with unlabeled target-domain text so
        # customization can later train those embedding rows
        extra = load_clean_jsonl(args.vocab_from)
        vocab = build_vocab(
            list(train_ds.texts()) + [c.text for c in extra],
            min_freq=1, max_size=20000,
        )
    model = pretrain_base(train_ds, cfg.model_config(vocab_size=4), tcfg,
                          vocab=vocab)
    _ensure_parent(args.output)
    save_checkpoint(model, args.output)
    report_path = args.output + ".train.json"
    _write_text(report_path, reports.train_report_json(model._last_report))
    inputs = {"train": args.train}
    if args.vocab_from:
        inputs["vocab_from"] = args.vocab_from
    _write_manifest(
        _manifest_for(args.output), "pretrain", cfg,
        inputs, [args.output, report_path],
        {"dataset_fingerprint": train_ds.fingerprint,
         "final_train_accuracy": model.meta["final_train_accuracy"]},
    )
    losses = model.meta["epoch_losses"]
    print(
        f"pretrained base on {len(train_ds)} examples, "
        f"loss {losses[0]:.3f} -> {losses[-1]:.3f}, "
        f"train acc {model.meta['final_train_accuracy']:.1f}% -> {args.output}"
    )
    return EXIT_OK


def cmd_customize(args, cfg):
    base = load_checkpoint(args.base)
    train_ds = load_dataset(args.train, split="train")
    tcfg = cfg.train_config(n_trainable_layers=args.layers, **_train_overrides(args))
    model, report = customize(base, train_ds, tcfg)
    _ensure_parent(args.output)
    save_checkpoint(model, args.output)
    report_path = args.output + ".train.json"
    _write_text(report_path, reports.train_report_json(report))
    _write_manifest(
        _manifest_for(args.output), "customize", cfg,
        {"base": args.base, "train": args.train}, [args.output, report_path],
        {"n_trainable_layers": args.layers,
         "dataset_fingerprint": train_ds.fingerprint},
    )
    print(
        f"customized with n={args.layers} trainable layers on "
        f"{len(train_ds)} examples -> {args.output}"
    )
    return EXIT_OK


def cmd_eval(args, cfg):
    model = load_checkpoint(args.model)
    test_ds = load_dataset(args.test, split="test")
    baseline_eval = None
    inputs = {"model": args.model, "test": args.test}
    if args.baseline:
        baseline = load_checkpoint(args.baseline)
        baseline_eval = evaluate(baseline, test_ds)
        inputs["baseline"] = args.baseline
    report = evaluate(
        model, test_ds, baseline=baseline_eval,
        baseline_name=_model_name(args.baseline) if args.baseline else None,
    )
    _write_text(args.output, reports.eval_report_json(report))
    outputs = [args.output]
    if baseline_eval is not None:
        csv_text, txt_text = reports.summary_tables(
            _model_name(args.model), baseline_eval, report
        )
        stem = os.path.splitext(args.output)[0]
        _write_text(stem + "_summary.csv", csv_text)
        _write_text(stem + "_summary.txt", txt_text)
        outputs += [stem + "_summary.csv", stem + "_summary.txt"]
    _write_manifest(
        _manifest_for(args.output), "eval", cfg, inputs, outputs,
        {"accuracy": report.accuracy, "test_fingerprint": test_ds.fingerprint},
    )
    line = f"accuracy {report.accuracy:.1f}% on {report.n_examples} examples"
    if baseline_eval is not None:
        line += (
            f" (base {baseline_eval.accuracy:.1f}%, "
            f"improvement {report.improvement_points:+.1f} points, "
            f"{report.improvement_relative:+.1f}%)"
        )
    print(line)
    return EXIT_OK


def cmd_sweep(args, cfg):
    base = load_checkpoint(args.base)
    train_ds = load_dataset(args.train, split="train")
    test_ds = load_dataset(args.test, split="test")
    ns = sorted({int(part) for part in args.layers.split(",") if part.strip() != ""})
    if not ns:
        raise ValidationError("sweep needs at least one layer count")
    tcfg = cfg.train_config(**_train_overrides(args))
    rows = sweep_layers(base, train_ds, test_ds, ns, tcfg)
    csv_text, txt_text = reports.sweep_tables(rows, base.config.n_layers)
    os.makedirs(args.outdir, exist_ok=True)
    csv_path = os.path.join(args.outdir, "sweep.csv")
    txt_path = os.path.join(args.outdir, "sweep.txt")
    _write_text(csv_path, csv_text)
    _write_text(txt_path, txt_text)
    _write_manifest(
        os.path.join(args.outdir, "manifest.json"), "sweep", cfg,
        {"base": args.base, "train": args.train, "test": args.test},
        [csv_path, txt_path],
        {"ns": ns, "accuracies": {str(r.n): r.accuracy for r in rows}},
    )
    print(txt_text, end="")
    return EXIT_OK


def cmd_compare_schemes(args, cfg):
    base = load_checkpoint(args.base)
    comments = load_clean_jsonl(args.comments)
    test_ds = load_dataset(args.test, split="test")
    backend = _make_backend(
        cfg, lexicon_path=args.lexicon,
        seed=0 if args.seed is None else args.seed,
    )
    tcfg = cfg.train_config(**_train_overrides(args))
    rows = compare_schemes(base, comments, backend, test_ds, tcfg)
    csv_text, txt_text = reports.scheme_tables(rows)
    os.makedirs(args.outdir, exist_ok=True)
    csv_path = os.path.join(args.outdir, "schemes.csv")
    txt_path = os.path.join(args.outdir, "schemes.txt")
    _write_text(csv_path, csv_text)
    _write_text(txt_path, txt_text)
    _write_manifest(
        os.path.join(args.outdir, "manifest.json"), "compare-schemes", cfg,
        {"base": args.base, "comments": args.comments, "test": args.test},
        [csv_path, txt_path],
        {"accuracies": {r.scheme: r.accuracy for r in rows}},
    )
    print(txt_text, end="")
    return EXIT_OK


def cmd_wordcloud(args, cfg):
    model = load_checkpoint(args.model)
    comments = load_clean_jsonl(args.input)
    groups = group_by_sentiment(model, comments)
    os.makedirs(args.outdir, exist_ok=True)
    outputs = []
    counts = {}
    for label in SentimentLabel:
        table = count_ngrams(
            groups[label], orders=(1, 2), sentiment=label, min_token_len=2
        )
        svg, sidecar = render_wordcloud(table, k=args.top, seed=args.seed)
        stem = os.path.join(args.outdir, f"wordcloud_{label.word.lower()}")
        _write_text(stem + ".svg", svg)
        _write_text(
            stem + ".json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
        )
        outputs += [stem + ".svg", stem + ".json"]
        counts[label.word.lower()] = len(sidecar)
    _write_manifest(
        os.path.join(args.outdir, "manifest.json"), "wordcloud", cfg,
        {"model": args.model, "comments": args.input}, outputs,
        {"entries": counts, "seed": args.seed, "top": args.top},
    )
    print(
        "wordclouds written: "
        + ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
        + f" -> {args.outdir}"
    )
    return EXIT_OK


def cmd_pipeline(args, cfg):
    """End-to-end offline demo: synth corpora, ingest, preprocess,
    pretrain, weak-label, customize, evaluate, word clouds."""
    corpus_dir = cfg.get("paths", "corpus_dir")
    ckpt_dir = cfg.get("paths", "checkpoints_dir")
    reports_dir = cfg.get("paths", "reports_dir")
    for d in (corpus_dir, ckpt_dir, reports_dir):
        os.makedirs(d, exist_ok=True)

    spec_path = cfg.get("paths", "synth_spec")
    spec = load_spec(spec_path) if spec_path else default_spec()
    seed = cfg.get("synth", "seed")
    generic_train, domain_train, domain_test = synth_corpus(spec, seed)
    ds_paths = {}
    for name, ds in (
        ("generic_train", generic_train),
        ("domain_test", domain_test),
    ):
        ds_paths[name] = os.path.join(corpus_dir, f"{name}.jsonl")
        save_dataset(ds, ds_paths[name])
    # the domain train comments play the role of an unlabeled dump
    raw_path = os.path.join(corpus_dir, "domain_raw.jsonl")
    save_raw_jsonl(to_raw_comments(domain_train), raw_path)
    print(f"[1/8] synth corpora -> {corpus_dir}")

    ingested = ingest(raw_path)
    print(f"[2/8] ingested {len(ingested)} raw comments "
          f"({ingested.skipped} skipped)")

    corpus = preprocess(ingested)
    domain_comments = list(corpus)
    comments_path = os.path.join(corpus_dir, "domain_comments.jsonl")
    save_clean_jsonl(domain_comments, comments_path)
    print(f"[3/8] preprocessed to {len(domain_comments)} clean comments "
          f"-> {comments_path}")

    tcfg = cfg.train_config()
    vocab = build_vocab(
        list(generic_train.texts()) + [c.text for c in domain_comments],
        min_freq=1, max_size=20000,
    )
    base = pretrain_base(generic_train, cfg.model_config(vocab_size=4), tcfg,
                         vocab=vocab)
    base_path = os.path.join(ckpt_dir, "base.ckpt")
    save_checkpoint(base, base_path)
    _write_text(base_path + ".train.json",
                reports.train_report_json(base._last_report))
    print(f"[4/8] pretrained base -> {base_path}")

    backend = _make_backend(cfg, seed=seed)
    labeled, rejects = llm_label(
        domain_comments, backend,
        retries=cfg.get("labeler", "retries"),
        max_workers=cfg.get("labeler", "max_workers"),
    )
    labeled_path = os.path.join(corpus_dir, "labeled_train.jsonl")
    save_dataset(labeled, labeled_path)
    print(f"[5/8] weak-labeled {len(labeled)} comments "
          f"({len(rejects)} rejected) -> {labeled_path}")

    custom, custom_report = customize(base, labeled, tcfg)
    custom_path = os.path.join(ckpt_dir, "custom.ckpt")
    save_checkpoint(custom, custom_path)
    _write_text(custom_path + ".train.json",
                reports.train_report_json(custom_report))
    print(f"[6/8] customized (n={tcfg.n_trainable_layers}) -> {custom_path}")

    base_eval = evaluate(base, domain_test)
    custom_eval = evaluate(custom, domain_test, baseline=base_eval,
                           baseline_name="base")
    _write_text(os.path.join(reports_dir, "eval_base.json"),
                reports.eval_report_json(base_eval))
    _write_text(os.path.join(reports_dir, "eval_custom.json"),
                reports.eval_report_json(custom_eval))
    csv_text, txt_text = reports.summary_tables("custom", base_eval, custom_eval)
    _write_text(os.path.join(reports_dir, "summary.csv"), csv_text)
    _write_text(os.path.join(reports_dir, "summary.txt"), txt_text)
    print(f"[7/8] eval: base {base_eval.accuracy:.1f}%, "
          f"custom {custom_eval.accuracy:.1f}% "
          f"({custom_eval.improvement_points:+.1f} points) -> {reports_dir}")

    groups = group_by_sentiment(custom, domain_comments)
    cloud_outputs = []
    for label in SentimentLabel:
        table = count_ngrams(groups[label], orders=(1, 2), sentiment=label,
                             min_token_len=2)
        svg, sidecar = render_wordcloud(table, k=40, seed=seed)
        stem = os.path.join(reports_dir, f"wordcloud_{label.word.lower()}")
        _write_text(stem + ".svg", svg)
        _write_text(stem + ".json",
                    json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        cloud_outputs += [stem + ".svg", stem + ".json"]
    print(f"[8/8] word clouds -> {reports_dir}")

    outputs = (
        list(ds_paths.values())
        + [raw_path, comments_path, labeled_path, base_path, custom_path]
        + [os.path.join(reports_dir, n) for n in
           ("eval_base.json", "eval_custom.json", "summary.csv", "summary.txt")]
        + cloud_outputs
    )
    inputs = {"spec": spec_path} if spec_path else {}
    _write_manifest(
        os.path.join(reports_dir, "manifest.json"), "pipeline", cfg,
        inputs, outputs,
        {
            "seed": seed,
            "ingested": len(ingested),
            "base_accuracy": base_eval.accuracy,
            "custom_accuracy": custom_eval.accuracy,
            "improvement_points": custom_eval.improvement_points,
            "fingerprints": {
                "generic_train": generic_train.fingerprint,
                "labeled_train": labeled.fingerprint,
                "domain_test": domain_test.fingerprint,
            },
        },
    )
    print(txt_text, end="")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_train_flags(sub):
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--batch-size", type=int, default=None)
    sub.add_argument("--lr", type=float, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--allow-short", action="store_true",
                     help="permit fewer than 10 epochs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="senttune",
        description="Domain customization pipeline for sentiment analysis "
                    "of social-network comments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", default=None, help="INI config file")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="normalize a raw comment dump")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl"])
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="clean, deduplicate, tokenize")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl"])
    p.add_argument("--stopwords", default=None)
    p.add_argument("--keep-emoji", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="build synthetic oracle corpora")
    p.add_argument("--outdir", required=True)
    p.add_argument("--spec", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("label", help="weak-label comments (x -> y)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("generate", help="generate labeled comments (y -> x)")
    p.add_argument("--label", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pretrain", help="train a base model from scratch")
    p.add_argument("--train", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--vocab-from", default=None,
                   help="cleaned-comments JSONL whose words widen the vocabulary")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("customize", help="adapt a base model to a domain")
    p.add_argument("--base", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--layers", type=int, required=True,
                   help="trainable encoder layers, counted from the output")
    _add_train_flags(p)
    p.set_defaults(func=cmd_customize)

    p = sub.add_parser("eval", help="score a model on a gold test set")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--baseline", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="accuracy per trainable-layer count")
    p.add_argument("--base", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--layers", required=True,
                   help="comma-separated layer counts, e.g. 0,1,2,4")
    p.add_argument("--outdir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-schemes", help="x->y labeling vs y->x generation")
    p.add_argument("--base", required=True)
    p.add_argument("--comments", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--lexicon", default=None)
    _add_train_flags(p)
    p.set_defaults(func=cmd_compare_schemes)

    p = sub.add_parser("wordcloud", help="per-sentiment n-gram clouds")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--top", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_wordcloud)

    p = sub.add_parser("pipeline", help="offline end-to-end demo")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return EXIT_IO
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SentTuneError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
