"""Numpy implementations of the numeric hot kernels.

``_fastkernels.pyx`` implements the same contract as a compiled extension;
``senttune.kernels`` selects one of the two at import time.  Keep the two
files in lockstep: same signatures, same formulas, same conventions.

Conventions: arrays are float64 and C-contiguous; 2d kernels reduce over the
last axis; nothing here mutates its inputs except ``adam_update``, which is
the documented in-place optimizer step.
"""

import numpy as np

SQRT_2_OVER_PI = 0.7978845608028654
GELU_CUBIC = 0.044715


def softmax2d(x):
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def softmax2d_backward(p, gout):
    # dx = p * (g - sum(p * g)) per row
    dot = (p * gout).sum(axis=1, keepdims=True)
    return p * (gout - dot)


def layernorm2d(x, gamma, beta, eps):
    """Standardize each row (population variance), then apply gamma/beta.

    Returns (y, xhat, inv_std); the latter two feed the backward pass.
    """
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    return xhat * gamma + beta, xhat, inv_std.ravel()


def layernorm2d_backward(gout, xhat, inv_std, gamma):
    dxhat = gout * gamma
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    gx = (dxhat - m1 - xhat * m2) * inv_std[:, None]
    dgamma = (gout * xhat).sum(axis=0)
    dbeta = gout.sum(axis=0)
    return gx, dgamma, dbeta


def gelu(x):
    """tanh-approximated gelu: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    u = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(u))


def gelu_backward(x, gout):
    x2 = x * x
    u = SQRT_2_OVER_PI * (x + GELU_CUBIC * x2 * x)
    t = np.tanh(u)
    du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * x2)
    return gout * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def cross_entropy2d(logits, labels):
    """Mean negative log-softmax at the label index.

    Uses the max-shifted log-sum-exp so extreme logits cannot overflow.
    Returns (loss, probs); probs feed the backward pass.
    """
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    z = e.sum(axis=1, keepdims=True)
    p = e / z
    rows = np.arange(logits.shape[0])
    nll = (np.log(z.ravel()) + m.ravel()) - logits[rows, labels]
    return float(nll.mean()), p


def cross_entropy2d_backward(p, labels, scale):
    """d(mean nll)/d(logits) scaled by the upstream gradient.

    ``scale`` is upstream_grad / batch_size.
    """
    g = p * scale
    g[np.arange(len(labels)), labels] -= scale
    return g


def adam_update(param, grad, m, v, lr, beta1, beta2, eps, t):
    """One bias-corrected Adam step, in place on param/m/v (1d views)."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    param -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def embedding_backward(ids, gout, vocab_size):
    """Scatter-add per-position gradients into a fresh embedding-table grad."""
    table = np.zeros((vocab_size, gout.shape[1]))
    np.add.at(table, ids, gout)
    return table
