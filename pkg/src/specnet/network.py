"""Sequential network executor over instantiated layers.

A :class:`Network` owns runtime layers built from a declarative
:class:`~specnet.models.NetworkSpec`. Training consumes pre-softmax logits
through the fused cross-entropy (numerically stable); prediction runs the
full chain including the terminal softmax.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .layers import IdentityConcat, SoftmaxOutput, build_layer, softmax_crossentropy
from .models import NetworkSpec


class Network:
    """Instantiated parameters for a NetworkSpec, with forward/backward."""

    def __init__(self, spec: NetworkSpec, layers):
        self.spec = spec
        self.layers = list(layers)
        self._softmax_terminal = bool(self.layers) and isinstance(self.layers[-1], SoftmaxOutput)

    @classmethod
    def from_spec(cls, spec: NetworkSpec, seed) -> "Network":
        """Instantiate with seeded init; same seed gives bit-identical params."""
        rng = np.random.default_rng(seed)
        return cls(spec, [build_layer(layer_spec, rng) for layer_spec in spec.layers])

    # -- forward ------------------------------------------------------------

    def _active_layers(self, include_softmax: bool):
        if self._softmax_terminal and not include_softmax:
            return self.layers[:-1]
        return self.layers

    def _run(self, x, include_softmax: bool):
        x = np.asarray(x, dtype=np.float64)
        self._last_input = x
        out = x
        for layer in self._active_layers(include_softmax):
            if isinstance(layer, IdentityConcat):
                out = layer.forward(out, x)
            else:
                out = layer.forward(out)
        return out

    def logits(self, x):
        """Pre-softmax scores; caches intermediates for a later backward."""
        return self._run(x, include_softmax=False)

    def predict_proba(self, x):
        """Class probabilities (full chain including the softmax output)."""
        return self._run(x, include_softmax=True)

    def forward_trace(self, x):
        """Per-layer (layer, input, output) triples for diagnostics."""
        x = np.asarray(x, dtype=np.float64)
        out = x
        trace = []
        for layer in self.layers:
            inp = out
            if isinstance(layer, IdentityConcat):
                out = layer.forward(inp, x)
            else:
                out = layer.forward(inp)
            trace.append((layer, inp, out))
        return trace

    # -- loss and gradients ---------------------------------------------------

    def loss(self, x, onehot) -> float:
        """Mean cross-entropy over the batch (scalar for a single sample)."""
        losses, _, _ = softmax_crossentropy(self.logits(x), onehot)
        return float(np.mean(losses))

    def backprop(self, x, onehot):
        """Forward + backward; fills every layer's ``grads`` with batch means.

        Returns ``(mean_loss, probs, grad_input)``.
        """
        logits = self.logits(x)
        losses, probs, grad = softmax_crossentropy(logits, onehot)
        if np.ndim(losses) > 0:
            grad = grad / grad.shape[0]
        grad_input = self._backward(grad)
        return float(np.mean(losses)), probs, grad_input

    def _backward(self, grad):
        bypass_grad = None
        for layer in reversed(self._active_layers(include_softmax=False)):
            if isinstance(layer, IdentityConcat):
                grad, chunk = layer.backward(grad)
                bypass_grad = chunk if bypass_grad is None else bypass_grad + chunk
            else:
                grad = layer.backward(grad)
        if bypass_grad is not None:
            grad = grad + bypass_grad
        return grad

    # -- parameter access -----------------------------------------------------

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """Ordered (name, array) pairs; arrays are live (mutale in place)."""
        out = []
        for i, layer in enumerate(self.layers):
            for key, value in layer.params.items():
                out.append((f"layer{i}.{key}", value))
        return out

    def gradients(self) -> list[tuple[str, np.ndarray]]:
        """Gradients from the most recent backprop, aligned with parameters()."""
        out = []
        for i, layer in enumerate(self.layers):
            for key in layer.params:
                if key not in layer.grads:
                    raise ShapeError(f"layer{i}.{key}: no gradient; call backprop first")
                out.append((f"layer{i}.{key}", layer.grads[key]))
        return out

    def parameter_arrays(self) -> list[np.ndarray]:
        return [arr for _, arr in self.parameters()]

    def set_parameter_arrays(self, arrays) -> None:
        """Overwrite parameters in declaration order (shapes must match)."""
        current = self.parameters()
        if len(arrays) != len(current):
            raise ShapeError(f"expected {len(current)} parameter tensors, got {len(arrays)}")
        for (name, dst), src in zip(current, arrays):
            src = np.asarray(src, dtype=np.float64)
            if src.shape != dst.shape:
                raise ShapeError(f"{name}: shape {src.shape} does not match {dst.shape}")
            dst[...] = src
