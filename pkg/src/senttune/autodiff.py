"""Dense float64 tensors with reverse-mode gradients.

A ``Tensor`` is an immutable-by-convention wrapper around a numpy float64
array.  Operations executed while a ``GradientTape`` is active record their
backward closures on that tape; ``tape.gradients(loss)`` then walks the
records in reverse and returns one gradient per watched parameter.

Only tensors reachable from a watched parameter are traversed, so freezing
the lower layers of a model genuinely skips their backward work.

A tape is single-owner: tapes nest per thread and ops record only on the
innermost active tape of the current thread.
"""

import threading

import numpy as np

from . import kernels
from .errors import TapeError, ValidationError

_LOCAL = threading.local()


def _tape_stack():
    stack = getattr(_LOCAL, "tapes", None)
    if stack is None:
        stack = []
        _LOCAL.tapes = stack
    return stack


def _active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Shaped float64 value; `name` identifies persistent parameters."""

    __slots__ = ("data", "name")

    def __init__(self, data, name=None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"tensor {name or ''} contains non-finite values")
        self.data = arr
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(()))

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Tensor{tag} shape={self.data.shape}>"


def _record(out, inputs, backward):
    tape = _active_tape()
    if tape is not None:
        tape._record(out, inputs, backward)
    return out


class GradientTape:
    """Records the operation graph and resolves watched-parameter gradients."""

    def __init__(self):
        self._records = []
        self._watched = {}
        self._out_ids = set()

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise TapeError("tape exited out of order")
        stack.pop()
        return False

    def watch(self, *tensors):
        for t in tensors:
            self._watched[id(t)] = t

    def _record(self, out, inputs, backward):
        self._records.append((out, inputs, backward))
        self._out_ids.add(id(out))

    def gradients(self, loss):
        """Gradients of scalar ``loss`` for every watched tensor.

        Watched tensors that do not influence the loss get zero gradients
        of the matching shape; unwatched tensors get no entry at all.
        """
        if id(loss) not in self._out_ids:
            raise TapeError("loss tensor was not produced under this tape")
        if loss.data.size != 1:
            raise ValidationError(
                f"loss must be a scalar, got shape {loss.data.shape}"
            )

        # Forward sweep: mark everything downstream of a watched tensor.
        needed = set(self._watched)
        for out, inputs, _ in self._records:
            if any(id(t) in needed for t in inputs if t is not None):
                needed.add(id(out))

        grads = {id(loss): np.ones_like(loss.data)}
        for out, inputs, backward in reversed(self._records):
            oid = id(out)
            if oid not in needed:
                continue
            if oid in self._watched:
                gout = grads.get(oid)
            else:
                gout = grads.pop(oid, None)
            if gout is None:
                continue
            for t, g in zip(inputs, backward(gout)):
                if t is None or g is None:
                    continue
                tid = id(t)
                if tid not in needed:
                    continue
                acc = grads.get(tid)
                grads[tid] = g if acc is None else acc + g

        result = {}
        for tid, t in self._watched.items():
            g = grads.get(tid)
            if g is None:
                g = np.zeros_like(t.data)
            result[t] = Tensor(np.asarray(g, dtype=np.float64))
        return result


# ---------------------------------------------------------------------------
# Operations


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def matmul(a, b):
    """Matrix product.

    Supports a 2d weight on the right under any leading batch shape of
    ``a``, or two stacks of matrices with identical leading dims.
    """
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2:
        raise ValidationError(
            f"matmul needs at least 2d operands, got {ad.shape} and {bd.shape}"
        )
    if ad.shape[-1] != bd.shape[-2]:
        raise ValidationError(
            f"matmul inner dimensions disagree: {ad.shape} x {bd.shape}"
        )
    if bd.ndim == 2:
        out = Tensor(ad @ bd)

        def backward(g):
            ga = g @ bd.T
            k = ad.shape[-1]
            gb = ad.reshape(-1, k).T @ g.reshape(-1, bd.shape[1])
            return ga, gb

    elif ad.ndim == bd.ndim and ad.shape[:-2] == bd.shape[:-2]:
        out = Tensor(ad @ bd)

        def backward(g):
            return g @ bd.swapaxes(-1, -2), ad.swapaxes(-1, -2) @ g

    else:
        raise ValidationError(
            f"unsupported matmul operand shapes: {ad.shape} x {bd.shape}"
        )
    return _record(out, (a, b), backward)


def add(a, b):
    out = Tensor(a.data + b.data)
    a_shape, b_shape = a.data.shape, b.data.shape

    def backward(g):
        return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

    return _record(out, (a, b), backward)


def add_const(a, c):
    """Add a constant ndarray; no gradient flows into the constant."""
    c = np.asarray(c, dtype=np.float64)
    out = Tensor(a.data + c)
    a_shape = a.data.shape

    def backward(g):
        return (_unbroadcast(g, a_shape),)

    return _record(out, (a,), backward)


def sub(a, b):
    out = Tensor(a.data - b.data)
    a_shape, b_shape = a.data.shape, b.data.shape

    def backward(g):
        return _unbroadcast(g, a_shape), -_unbroadcast(g, b_shape)

    return _record(out, (a, b), backward)


def mul(a, b):
    out = Tensor(a.data * b.data)
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _record(out, (a, b), backward)


def scale(a, c):
    """Multiply by a python scalar."""
    c = float(c)
    out = Tensor(a.data * c)

    def backward(g):
        return (g * c,)

    return _record(out, (a,), backward)


def reshape(a, shape):
    old = a.data.shape
    out = Tensor(a.data.reshape(shape))

    def backward(g):
        return (g.reshape(old),)

    return _record(out, (a,), backward)


def transpose(a, axes):
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor(a.data.transpose(axes))

    def backward(g):
        return (g.transpose(inverse),)

    return _record(out, (a,), backward)


def sum_all(a):
    out = Tensor(a.data.sum())
    shape = a.data.shape

    def backward(g):
        return (np.broadcast_to(g, shape).copy() if shape else g,)

    return _record(out, (a,), backward)


def embedding(table, ids):
    """Gather rows of ``table`` by integer index array ``ids``."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ValidationError(
            f"embedding ids out of range for table of {table.data.shape[0]} rows"
        )
    flat = np.ascontiguousarray(ids.reshape(-1), dtype=np.int64)
    vocab, dim = table.data.shape
    out = Tensor(table.data[flat].reshape(ids.shape + (dim,)))

    def backward(g):
        gflat = np.ascontiguousarray(g.reshape(-1, dim))
        return (kernels.embedding_backward(flat, gflat, vocab),)

    return _record(out, (table,), backward)


def first_token(a):
    """Select position 0 along axis 1: (b, s, d) -> (b, d)."""
    if a.data.ndim != 3:
        raise ValidationError(f"first_token expects a 3d tensor, got {a.data.shape}")
    out = Tensor(a.data[:, 0, :].copy())
    shape = a.data.shape

    def backward(g):
        full = np.zeros(shape)
        full[:, 0, :] = g
        return (full,)

    return _record(out, (a,), backward)


def softmax(a):
    """Softmax over the last axis; rows sum to 1, shift-invariant."""
    shape = a.data.shape
    x2d = np.ascontiguousarray(a.data.reshape(-1, shape[-1]))
    p2d = kernels.softmax2d(x2d)
    out = Tensor(p2d.reshape(shape))

    def backward(g):
        g2d = np.ascontiguousarray(g.reshape(-1, shape[-1]))
        return (kernels.softmax2d_backward(p2d, g2d).reshape(shape),)

    return _record(out, (a,), backward)


def layer_norm(a, gamma, beta, eps=1e-5):
    """Per-last-axis standardization followed by the gamma/beta affine."""
    if eps <= 0:
        raise ValidationError("layer_norm eps must be positive")
    shape = a.data.shape
    d = shape[-1]
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ValidationError(
            f"layer_norm affine shapes {gamma.data.shape}/{beta.data.shape} "
            f"do not match feature size {d}"
        )
    x2d = np.ascontiguousarray(a.data.reshape(-1, d))
    y2d, xhat, inv_std = kernels.layernorm2d(x2d, gamma.data, beta.data, eps)
    out = Tensor(y2d.reshape(shape))

    def backward(g):
        g2d = np.ascontiguousarray(g.reshape(-1, d))
        gx, dgamma, dbeta = kernels.layernorm2d_backward(
            g2d, xhat, inv_std, gamma.data
        )
        return gx.reshape(shape), dgamma, dbeta

    return _record(out, (a, gamma, beta), backward)


def gelu(a):
    shape = a.data.shape
    flat = np.ascontiguousarray(a.data.reshape(-1))
    out = Tensor(kernels.gelu(flat).reshape(shape))

    def backward(g):
        gflat = np.ascontiguousarray(g.reshape(-1))
        return (kernels.gelu_backward(flat, gflat).reshape(shape),)

    return _record(out, (a,), backward)


def dropout(a, rate, rng):
    """Inverted dropout; identity when rate is 0 or rng is None."""
    if rng is None or rate == 0.0:
        return a
    if not 0.0 <= rate < 1.0:
        raise ValidationError(f"dropout rate {rate} outside [0, 1)")
    keep = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    out = Tensor(a.data * keep)

    def backward(g):
        return (g * keep,)

    return _record(out, (a,), backward)


def cross_entropy(logits, labels):
    """Mean negative log-softmax of the true class over the batch."""
    labels = np.ascontiguousarray(np.asarray(labels), dtype=np.int64)
    if logits.data.ndim != 2:
        raise ValidationError(
            f"cross_entropy expects 2d logits, got {logits.data.shape}"
        )
    b, k = logits.data.shape
    if b == 0:
        raise ValidationError("cross_entropy on an empty batch")
    if labels.shape != (b,):
        raise ValidationError(
            f"labels shape {labels.shape} does not match batch size {b}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValidationError(f"labels must lie in [0, {k})")
    l2d = np.ascontiguousarray(logits.data)
    loss, p = kernels.cross_entropy2d(l2d, labels)
    out = Tensor(loss)

    def backward(g):
        return (kernels.cross_entropy2d_backward(p, labels, float(g) / b),)

    return _record(out, (logits,), backward)
