"""Adam optimizer over named parameter dictionaries."""

import numpy as np

from . import kernels
from .errors import ValidationError


class Adam:
    """Adam with bias correction; state is keyed by parameter name.

    Parameters are visited in sorted-name order so that a training run is
    reproducible regardless of dict construction order.
    """

    def __init__(self, lr=5e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValidationError(f"learning rate must be positive, got {lr}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValidationError("betas must lie in [0, 1)")
        if eps <= 0:
            raise ValidationError(f"eps must be positive, got {eps}")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, params, grads):
        """Update ``params`` in place from ``grads``.

        ``params`` maps name -> Tensor, ``grads`` maps the same Tensor
        objects (or names) -> gradient Tensor; params without a gradient
        are left untouched.
        """
        self.t += 1
        for name in sorted(params):
            p = params[name]
            g = grads.get(p)
            if g is None:
                g = grads.get(name)
            if g is None:
                continue
            if g.data.shape != p.data.shape:
                raise ValidationError(
                    f"gradient shape {g.data.shape} does not match "
                    f"parameter {name} shape {p.data.shape}"
                )
            m = self._m.get(name)
            if m is None:
                m = self._m[name] = np.zeros(p.data.size)
                self._v[name] = np.zeros(p.data.size)
            v = self._v[name]
            kernels.adam_update(
                p.data.reshape(-1),
                np.ascontiguousarray(g.data.reshape(-1)),
                m,
                v,
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                self.t,
            )
