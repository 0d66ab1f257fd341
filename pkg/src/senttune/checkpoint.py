"""Byte-deterministic binary model persistence.

Layout: magic ``ALRN``, u32 little-endian format version, u64
little-endian manifest length, a UTF-8 JSON manifest (model config,
embedded vocabulary text, tensor table sorted by name, trainable mask,
metadata), then one contiguous little-endian float64 blob.  Identical
model state always serializes to identical bytes; nothing time- or
path-dependent is written.
"""

import json
import struct

import numpy as np

from .autodiff import Tensor
from .errors import (
    CheckpointFormatError,
    CheckpointIntegrityError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    ValidationError,
)
from .model import Model, ModelConfig, parameter_shapes
from .tokenizer import vocab_from_text, vocab_to_text

MAGIC = b"ALRN"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def checkpoint_bytes(model):
    """Serialize a model (with attached vocabulary) to bytes."""
    if model.vocab is None:
        raise ValidationError("checkpoint requires a model with an attached vocabulary")
    names = sorted(model.params)
    tensors = []
    offset = 0
    chunks = []
    for name in names:
        arr = np.ascontiguousarray(model.params[name].data, dtype="<f8")
        tensors.append(
            {"name": name, "shape": list(arr.shape), "offset": offset}
        )
        chunk = arr.tobytes()
        chunks.append(chunk)
        offset += len(chunk)
    manifest = {
        "config": model.config.to_dict(),
        "vocab": vocab_to_text(model.vocab),
        "tensors": tensors,
        "trainable_mask": [bool(t) for t in model.trainable_mask],
        "meta": model.meta,
        "blob_bytes": offset,
    }
    body = json.dumps(
        manifest, sort_keys=True, separators=(",", ":"), ensure_ascii=True
    ).encode("utf-8")
    return _HEADER.pack(MAGIC, VERSION, len(body)) + body + b"".join(chunks)


def save_checkpoint(model, path):
    """Write the model to ``path``; same state → same bytes, always."""
    data = checkpoint_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def model_from_bytes(data):
    if len(data) < _HEADER.size:
        raise CheckpointTruncatedError(
            f"file holds {len(data)} bytes, shorter than the {_HEADER.size}-byte header"
        )
    magic, version, manifest_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {version} unsupported (reader handles {VERSION})"
        )
    manifest_end = _HEADER.size + manifest_len
    if len(data) < manifest_end:
        raise CheckpointTruncatedError(
            f"manifest declared {manifest_len} bytes but only "
            f"{len(data) - _HEADER.size} present"
        )
    try:
        manifest = json.loads(data[_HEADER.size:manifest_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"manifest is not valid JSON: {exc}") from exc

    for key in ("config", "vocab", "tensors", "trainable_mask", "meta", "blob_bytes"):
        if key not in manifest:
            raise CheckpointFormatError(f"manifest lacks required key {key!r}")
    try:
        config = ModelConfig(**manifest["config"]).validate()
    except TypeError as exc:
        raise CheckpointFormatError(f"malformed config section: {exc}") from exc

    blob = data[manifest_end:]
    if len(blob) != manifest["blob_bytes"]:
        raise CheckpointIntegrityError(
            f"manifest declares a {manifest['blob_bytes']}-byte tensor blob, "
            f"file carries {len(blob)}"
        )

    expected = parameter_shapes(config)
    entries = manifest["tensors"]
    if sorted(e["name"] for e in entries) != sorted(expected):
        raise CheckpointIntegrityError(
            "tensor table does not match the parameter set of the stored config"
        )
    params = {}
    total = 0
    for entry in entries:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        if shape != expected[name]:
            raise CheckpointIntegrityError(
                f"tensor {name} stored with shape {shape}, config implies "
                f"{expected[name]}"
            )
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 8
        if offset < 0 or offset + nbytes > len(blob):
            raise CheckpointIntegrityError(
                f"tensor {name} extends past the end of the blob"
            )
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        params[name] = Tensor(arr.reshape(shape).astype(np.float64), name=name)
        total += nbytes
    if total != len(blob):
        raise CheckpointIntegrityError(
            f"tensor table covers {total} bytes of a {len(blob)}-byte blob"
        )

    mask = manifest["trainable_mask"]
    if len(mask) != config.n_layers or not all(isinstance(b, bool) for b in mask):
        raise CheckpointIntegrityError(
            f"trainable mask {mask!r} does not fit {config.n_layers} layers"
        )
    vocab = vocab_from_text(manifest["vocab"], origin="embedded vocabulary")
    if vocab.size != config.vocab_size:
        raise CheckpointIntegrityError(
            f"embedded vocabulary holds {vocab.size} entries, config declares "
            f"{config.vocab_size}"
        )
    return Model(
        config=config,
        params=params,
        trainable_mask=tuple(mask),
        vocab=vocab,
        meta=manifest["meta"],
    )


def load_checkpoint(path):
    """Read a checkpoint back into a Model with vocabulary attached."""
    with open(path, "rb") as fh:
        data = fh.read()
    return model_from_bytes(data)
