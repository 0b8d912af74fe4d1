"""Finite-difference verification of the hand-written backward passes."""
from __future__ import annotations

import numpy as np

from .layers import Activation, MaxPool1D
from .network import Network

#: Gradients below this magnitude are compared on an absolute scale; keeps
#: finite-difference roundoff noise from inflating the relative error of
#: near-zero coordinates.
DENOMINATOR_FLOOR = 1e-3


def gradient_check(
    network: Network,
    x=None,
    onehot=None,
    epsilon: float = 1e-5,
    *,
    max_per_tensor: int | None = None,
    rng=None,
    loss=None,
    backward=None,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Every parameter tensor is perturbed coordinate by coordinate (or a random
    subset of ``max_per_tensor`` coordinates for large tensors, sampled with
    ``rng``). By default the scalar under test is the network's mean
    cross-entropy on ``(x, onehot)``; pass ``loss`` (``() -> float``) and
    ``backward`` (``() -> None``, must fill layer grads) to check a different
    scalar head.

    Relative error is ``|a - n| / max(|a|, |n|, 1e-3)``; coordinates where
    both gradients sit below the floor are effectively compared absolutely.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in [1e-7, 1e-3], got {epsilon}")
    for name, value in network.parameters():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"{name}: non-finite parameters")
    if loss is None:
        if x is None or onehot is None:
            raise ValueError("x and onehot are required unless loss/backward are given")
        def loss():
            return network.loss(x, onehot)
        def backward():
            network.backprop(x, onehot)
    elif backward is None:
        raise ValueError("a custom loss needs a matching backward")

    backward()
    analytic = {name: grad.copy() for name, grad in network.gradients()}

    rng = np.random.default_rng(rng)
    worst = 0.0
    for name, param in network.parameters():
        ana = analytic[name].reshape(-1)
        if max_per_tensor is not None and param.size > max_per_tensor:
            coords = rng.choice(param.size, size=max_per_tensor, replace=False)
        else:
            coords = range(param.size)
        flat = param.reshape(-1)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + epsilon
            hi = loss()
            flat[idx] = original - epsilon
            lo = loss()
            flat[idx] = original
            numeric = (hi - lo) / (2.0 * epsilon)
            denom = max(abs(float(ana[idx])), abs(numeric), DENOMINATOR_FLOOR)
            worst = max(worst, abs(float(ana[idx]) - numeric) / denom)
    return worst


def kink_margin(network: Network, x) -> float:
    """Distance from the nearest relu kink or pooling tie along a forward pass.

    Finite differences are unreliable when a perturbation can cross a relu
    zero or flip a max-pool argmax; inputs with a healthy margin avoid both.
    """
    margin = np.inf
    for layer, inp, _out in network.forward_trace(x):
        if isinstance(layer, Activation) and layer.spec.kind == "relu":
            margin = min(margin, float(np.abs(inp).min()))
        elif isinstance(layer, MaxPool1D):
            arr = np.asarray(inp, dtype=np.float64)
            if arr.ndim == 2:
                arr = arr[None]
            p = layer.spec.pool_size
            if p < 2:
                continue
            out_len = arr.shape[2] // p
            windows = arr[:, :, :out_len * p].reshape(arr.shape[0], arr.shape[1], out_len, p)
            top2 = np.sort(windows, axis=3)[..., -2:]
            margin = min(margin, float((top2[..., 1] - top2[..., 0]).min()))
    return margin


def sample_safe_input(network: Network, shape, rng, margin: float = 1e-3,
                      attempts: int = 200) -> np.ndarray:
    """Draw a standard-normal input whose forward pass stays off all kinks."""
    rng = np.random.default_rng(rng)
    for _ in range(attempts):
        x = rng.standard_normal(shape)
        if kink_margin(network, x) >= margin:
            return x
    raise RuntimeError(f"no input with kink margin >= {margin} after {attempts} attempts")
