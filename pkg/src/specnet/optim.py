"""Adam optimizer with bias correction.

Update-rule constants default to lr=1e-3, beta1=0.9, beta2=0.999,
epsilon=1e-8 (epsilon added outside the square root). The step is fully
deterministic given parameters, gradients, and state.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError


class Adam:
    """Holds first/second-moment state per parameter tensor; updates in place."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = list(params)  # (name, live array) pairs
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.t = 0
        self.m = [np.zeros_like(arr) for _, arr in self.params]
        self.v = [np.zeros_like(arr) for _, arr in self.params]

    def step(self, grads) -> None:
        """Apply one bias-corrected update from aligned (name, grad) pairs."""
        grads = list(grads)
        if len(grads) != len(self.params):
            raise ShapeError(f"expected {len(self.params)} gradient tensors, got {len(grads)}")
        for (pname, param), (gname, grad) in zip(self.params, grads):
            if pname != gname:
                raise ShapeError(f"gradient order mismatch: {gname} where {pname} expected")
            if np.asarray(grad).shape != param.shape:
                raise ShapeError(f"{pname}: gradient shape {np.shape(grad)} != parameter {param.shape}")
            if not np.all(np.isfinite(grad)):
                raise ValueError(f"{pname}: non-finite gradient; aborting optimizer step")

        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for i, ((_, param), (_, grad)) in enumerate(zip(self.params, grads)):
            m = self.m[i]
            v = self.v[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(grad)
            param -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.epsilon)
