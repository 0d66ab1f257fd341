"""Numeric hot-kernel backend selection.

Two interchangeable implementations exist: ``_fastkernels`` (compiled from
Cython at install time when a compiler is available) and ``_pykernels``
(plain numpy).  The compiled one wins by default; the SENTTUNE_KERNELS
environment variable pins a choice: ``compiled``, ``python``, or ``auto``.

``use()`` swaps the live backend at runtime, which the benchmark and the
backend-equivalence tests rely on.  Everything below the thin forwarders is
stateless, so swapping is safe at any point.
"""

import os

from . import _pykernels
from ..errors import ConfigError

try:
    from . import _fastkernels
except ImportError:
    _fastkernels = None


def available_backends():
    names = ["python"]
    if _fastkernels is not None:
        names.insert(0, "compiled")
    return names


def _select(name):
    if name == "auto":
        return _fastkernels if _fastkernels is not None else _pykernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _fastkernels is None:
            raise ConfigError(
                "SENTTUNE_KERNELS=compiled but the compiled kernel module "
                "is not installed"
            )
        return _fastkernels
    raise ConfigError(f"unknown kernel backend {name!r}")


_ALIASES = {
    "": "auto",
    "auto": "auto",
    "c": "compiled",
    "compiled": "compiled",
    "fast": "compiled",
    "py": "python",
    "python": "python",
    "numpy": "python",
}

_requested = os.environ.get("SENTTUNE_KERNELS", "auto").strip().lower()
if _requested not in _ALIASES:
    raise ConfigError(
        f"SENTTUNE_KERNELS={_requested!r} not recognized "
        "(use auto, compiled, or python)"
    )
_impl = _select(_ALIASES[_requested])

BACKEND = "compiled" if _impl is _fastkernels else "python"


def use(name):
    """Switch the live backend; returns the previous backend name."""
    global _impl, BACKEND
    previous = BACKEND
    canonical = _ALIASES.get(str(name).strip().lower())
    if canonical is None:
        raise ConfigError(f"unknown kernel backend {name!r}")
    _impl = _select(canonical)
    BACKEND = "compiled" if _impl is _fastkernels else "python"
    return previous


def softmax2d(x):
    return _impl.softmax2d(x)


def softmax2d_backward(p, gout):
    return _impl.softmax2d_backward(p, gout)


def layernorm2d(x, gamma, beta, eps):
    return _impl.layernorm2d(x, gamma, beta, eps)


def layernorm2d_backward(gout, xhat, inv_std, gamma):
    return _impl.layernorm2d_backward(gout, xhat, inv_std, gamma)


def gelu(x):
    return _impl.gelu(x)


def gelu_backward(x, gout):
    return _impl.gelu_backward(x, gout)


def cross_entropy2d(logits, labels):
    return _impl.cross_entropy2d(logits, labels)


def cross_entropy2d_backward(p, labels, scale):
    return _impl.cross_entropy2d_backward(p, labels, scale)


def adam_update(param, grad, m, v, lr, beta1, beta2, eps, t):
    return _impl.adam_update(param, grad, m, v, lr, beta1, beta2, eps, t)


def embedding_backward(ids, gout, vocab_size):
    return _impl.embedding_backward(ids, gout, vocab_size)
