"""Transformer encoder with a 3-way sentiment head and a layer partition.

The encoder is post-norm multi-head self-attention with learned
positional embeddings; the classifier reads the [CLS] position.  The
partition marks which of the L encoder blocks (counted from the output
side) stay trainable during customization; the rest are frozen.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import autodiff as ad
from . import kernels, rng
from .corpus import clean_text
from .errors import ValidationError
from .labeling import SentimentLabel
from .tokenizer import Vocabulary, encode_batch

MASK_BIAS = 1e30
N_CLASSES = 3


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    max_len: int = 64
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 4
    d_ff: int = 128
    dropout_rate: float = 0.1
    seed: int = 0

    def validate(self):
        problems = []
        if self.vocab_size < 4:
            problems.append(f"vocab_size must be >= 4, got {self.vocab_size}")
        if self.max_len < 2:
            problems.append(f"max_len must be >= 2, got {self.max_len}")
        if self.d_model < 1:
            problems.append(f"d_model must be >= 1, got {self.d_model}")
        if self.n_heads < 1:
            problems.append(f"n_heads must be >= 1, got {self.n_heads}")
        if self.d_model % max(self.n_heads, 1) != 0:
            problems.append(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}"
            )
        if self.n_layers < 1:
            problems.append(f"n_layers must be >= 1, got {self.n_layers}")
        if self.d_ff < 1:
            problems.append(f"d_ff must be >= 1, got {self.d_ff}")
        if not 0.0 <= self.dropout_rate < 1.0:
            problems.append(
                f"dropout_rate {self.dropout_rate} outside [0, 1)"
            )
        if problems:
            raise ValidationError("invalid model config: " + "; ".join(problems))
        return self

    def to_dict(self):
        return {
            "vocab_size": self.vocab_size,
            "max_len": self.max_len,
            "d_model": self.d_model,
            "n_heads": self.n_heads,
            "n_layers": self.n_layers,
            "d_ff": self.d_ff,
            "dropout_rate": self.dropout_rate,
            "seed": self.seed,
        }


@dataclass
class Model:
    config: ModelConfig
    params: dict
    trainable_mask: tuple
    vocab: Optional[Vocabulary] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_trainable_layers(self):
        return sum(1 for t in self.trainable_mask if t)


def parameter_shapes(config):
    """Name -> shape for every parameter tensor, in a fixed layout."""
    d, h = config.d_model, config.n_heads
    shapes = {
        "embed.token": (config.vocab_size, d),
        "embed.pos": (config.max_len, d),
        "head.w": (d, N_CLASSES),
        "head.b": (N_CLASSES,),
    }
    for i in range(config.n_layers):
        prefix = f"layer{i:02d}"
        for name in ("wq", "wk", "wv", "wo"):
            shapes[f"{prefix}.attn.{name}"] = (d, d)
        shapes[f"{prefix}.ffn.w1"] = (d, config.d_ff)
        shapes[f"{prefix}.ffn.w2"] = (config.d_ff, d)
        for ln in ("ln1", "ln2"):
            shapes[f"{prefix}.{ln}.gamma"] = (d,)
            shapes[f"{prefix}.{ln}.beta"] = (d,)
    del h
    return shapes


def _init_value(name, shape, config):
    if name.endswith(".gamma"):
        return np.ones(shape)
    if name.endswith(".beta") or name == "head.b":
        return np.zeros(shape)
    stream = rng.stream(config.seed, "init", name)
    if name.startswith("embed."):
        limit = math.sqrt(3.0 / config.d_model)
    else:
        fan_in, fan_out = shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
    return stream.uniform(-limit, limit, size=shape)


def init_model(config):
    """Fresh model, deterministically initialized from config.seed.

    Every parameter draws from its own named random stream, so adding a
    parameter never shifts the values of the others.
    """
    config.validate()
    params = {
        name: ad.Tensor(_init_value(name, shape, config), name=name)
        for name, shape in parameter_shapes(config).items()
    }
    return Model(
        config=config,
        params=params,
        trainable_mask=(True,) * config.n_layers,
    )


def clone_model(model):
    """Deep-copy parameters so training the copy leaves the source intact."""
    params = {
        name: ad.Tensor(p.data.copy(), name=name)
        for name, p in model.params.items()
    }
    return Model(
        config=model.config,
        params=params,
        trainable_mask=model.trainable_mask,
        vocab=model.vocab,
        meta=dict(model.meta),
    )


def set_trainable(model, n):
    """Partition: the n blocks nearest the output stay trainable.

    Embeddings join the trainable set only at n = L; the head is
    trainable whenever n >= 1.  n = 0 freezes everything and marks the
    model as the uncustomized Base.
    """
    L = model.config.n_layers
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError(f"n must be an integer, got {n!r}")
    if not 0 <= n <= L:
        raise ValidationError(f"n must lie in [0, {L}], got {n}")
    mask = tuple(i >= L - n for i in range(L))
    return replace(model, trainable_mask=mask)


def param_is_trainable(name, trainable_mask):
    if name.startswith("embed."):
        return all(trainable_mask)
    if name.startswith("head."):
        return any(trainable_mask)
    layer = int(name.split(".", 1)[0][len("layer"):])
    return trainable_mask[layer]


def trainable_params(model):
    return {
        name: p
        for name, p in model.params.items()
        if param_is_trainable(name, model.trainable_mask)
    }


def frozen_params(model):
    return {
        name: p
        for name, p in model.params.items()
        if not param_is_trainable(name, model.trainable_mask)
    }


def _split_heads(x, b, s, h, dh):
    return ad.transpose(ad.reshape(x, (b, s, h, dh)), (0, 2, 1, 3))


def forward(model, ids, mask, train_mode=False, dropout_rng=None):
    """Logits of shape (batch, 3) for an encoded batch.

    ``ids``/``mask`` come from the tokenizer's batch encoder and must
    use this model's vocabulary and max_len.  With train_mode off the
    pass is deterministic; padding positions are excluded from every
    attention softmax, so extra padding never changes the logits.
    """
    cfg = model.config
    ids = np.asarray(ids)
    mask = np.asarray(mask, dtype=np.float64)
    if ids.ndim != 2 or mask.shape != ids.shape:
        raise ValidationError(
            f"ids/mask must be matching 2d batches, got {ids.shape} and {mask.shape}"
        )
    b, s = ids.shape
    if s != cfg.max_len:
        raise ValidationError(
            f"batch encoded for length {s}, model expects max_len {cfg.max_len}"
        )
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        raise ValidationError(
            f"token id {int(ids.max())} outside model vocabulary "
            f"of size {cfg.vocab_size}"
        )

    rate = cfg.dropout_rate if train_mode else 0.0
    drop = dropout_rng if train_mode else None
    h = cfg.n_heads
    dh = cfg.d_model // h
    key_bias = ((mask - 1.0) * MASK_BIAS).reshape(b, 1, 1, s)

    p = model.params
    x = ad.add(ad.embedding(p["embed.token"], ids), p["embed.pos"])
    x = ad.dropout(x, rate, drop)

    for i in range(cfg.n_layers):
        prefix = f"layer{i:02d}"
        q = _split_heads(ad.matmul(x, p[f"{prefix}.attn.wq"]), b, s, h, dh)
        k = _split_heads(ad.matmul(x, p[f"{prefix}.attn.wk"]), b, s, h, dh)
        v = _split_heads(ad.matmul(x, p[f"{prefix}.attn.wv"]), b, s, h, dh)
        scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
        scores = ad.add_const(scores, key_bias)
        weights = ad.dropout(ad.softmax(scores), rate, drop)
        ctx = ad.reshape(
            ad.transpose(ad.matmul(weights, v), (0, 2, 1, 3)), (b, s, cfg.d_model)
        )
        attn_out = ad.dropout(ad.matmul(ctx, p[f"{prefix}.attn.wo"]), rate, drop)
        x = ad.layer_norm(
            ad.add(x, attn_out), p[f"{prefix}.ln1.gamma"], p[f"{prefix}.ln1.beta"]
        )
        ffn = ad.matmul(ad.gelu(ad.matmul(x, p[f"{prefix}.ffn.w1"])), p[f"{prefix}.ffn.w2"])
        ffn = ad.dropout(ffn, rate, drop)
        x = ad.layer_norm(
            ad.add(x, ffn), p[f"{prefix}.ln2.gamma"], p[f"{prefix}.ln2.beta"]
        )

    cls = ad.first_token(x)
    return ad.add(ad.matmul(cls, p["head.w"]), p["head.b"])


def predict(model, text, vocab=None, max_len=None):
    """(label, class probabilities) for one raw text string.

    The text runs through the cleaning pipeline first, so surrounding
    whitespace or markup never changes the prediction.  Ties break
    toward the lowest class index.
    """
    vocab = vocab if vocab is not None else model.vocab
    if vocab is None:
        raise ValidationError("predict needs a vocabulary (none attached to model)")
    max_len = max_len if max_len is not None else model.config.max_len
    cleaned = clean_text(text)
    ids, mask = encode_batch([cleaned], vocab, max_len)
    logits = forward(model, ids, mask, train_mode=False)
    probs = kernels.softmax2d(np.ascontiguousarray(logits.data))[0]
    label = SentimentLabel(int(np.argmax(probs)))
    return label, probs
