"""1D neural-network layers with hand-written forward and backward passes.

All tensors are float64 numpy arrays. Convolutional/pooling layers take
channels-first input, either a single sample ``(C, L)`` or a batch
``(N, C, L)``; dense layers take ``(n,)`` or ``(N, n)``. Output dimensionality
mirrors the input. Each layer caches on ``forward`` exactly what its
``backward`` needs, so a backward call must follow the matching forward.

Two kinds of objects live here: frozen *layer specs* (declarative, no
parameters, safe to share) and runtime layers, which own parameter and
gradient arrays keyed by name.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError

# ---------------------------------------------------------------------------
# Declarative layer specs
# ---------------------------------------------------------------------------

PADDING_MODES = ("valid", "same")
ACTIVATION_KINDS = ("relu", "tanh")
INIT_KINDS = ("he_uniform", "glorot_uniform")


@dataclass(frozen=True)
class Conv1DSpec:
    in_channels: int
    out_channels: int
    kernel_size: int
    padding: str = "valid"
    init: str = "he_uniform"

    def __post_init__(self):
        if self.padding not in PADDING_MODES:
            raise ShapeError(f"unknown padding mode {self.padding!r}; expected one of {PADDING_MODES}")
        if self.init not in INIT_KINDS:
            raise ShapeError(f"unknown init {self.init!r}; expected one of {INIT_KINDS}")
        if min(self.in_channels, self.out_channels, self.kernel_size) < 1:
            raise ShapeError("Conv1D channel counts and kernel size must be >= 1")


@dataclass(frozen=True)
class MaxPool1DSpec:
    pool_size: int

    def __post_init__(self):
        if self.pool_size < 1:
            raise ShapeError(f"pool_size must be >= 1, got {self.pool_size}")


@dataclass(frozen=True)
class DenseSpec:
    in_features: int
    out_features: int
    init: str = "he_uniform"

    def __post_init__(self):
        if self.init not in INIT_KINDS:
            raise ShapeError(f"unknown init {self.init!r}; expected one of {INIT_KINDS}")
        if min(self.in_features, self.out_features) < 1:
            raise ShapeError("Dense feature counts must be >= 1")


@dataclass(frozen=True)
class ActivationSpec:
    kind: str

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ShapeError(f"unknown activation {self.kind!r}; expected one of {ACTIVATION_KINDS}")


@dataclass(frozen=True)
class FlattenSpec:
    pass


@dataclass(frozen=True)
class CoordChannelSpec:
    low: float = -1.0
    high: float = 1.0


@dataclass(frozen=True)
class IdentityConcatSpec:
    pass


@dataclass(frozen=True)
class SoftmaxOutputSpec:
    pass


LayerSpec = Union[
    Conv1DSpec,
    MaxPool1DSpec,
    DenseSpec,
    ActivationSpec,
    FlattenSpec,
    CoordChannelSpec,
    IdentityConcatSpec,
    SoftmaxOutputSpec,
]

# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _init_limit(kind: str, fan_in: int, fan_out: int) -> float:
    if kind == "he_uniform":
        return float(np.sqrt(6.0 / fan_in))
    if kind == "glorot_uniform":
        return float(np.sqrt(6.0 / (fan_in + fan_out)))
    raise ShapeError(f"unknown init {kind!r}")


def _as_float3(x, what: str):
    """Normalize (C, L) or (N, C, L) input to a float64 batch, remember rank."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim == 3:
        return x, False
    raise ShapeError(f"{what} expects (C, L) or (N, C, L) input, got shape {x.shape}")


def _as_float2(x, what: str):
    """Normalize (n,) or (N, n) input to a float64 batch, remember rank."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None], True
    if x.ndim == 2:
        return x, False
    raise ShapeError(f"{what} expects (n,) or (N, n) input, got shape {x.shape}")


def _correlate(x, kernel):
    """Valid cross-correlation: x (N, C, L) with kernel (O, C, K) -> (N, O, L-K+1)."""
    windows = sliding_window_view(x, kernel.shape[2], axis=2)  # (N, C, L', K)
    out = np.tensordot(windows, kernel, axes=([1, 3], [1, 2]))  # (N, L', O)
    return np.ascontiguousarray(out.transpose(0, 2, 1))


def same_padding(kernel_size: int) -> tuple[int, int]:
    """Left/right zero padding for 'same' output length at stride 1.

    The total pad is kernel_size - 1; when it is odd the extra zero goes on
    the right (pinned convention).
    """
    total = kernel_size - 1
    left = total // 2
    return left, total - left


def conv_output_length(length: int, kernel_size: int, padding: str) -> int:
    if padding == "same":
        return length
    if kernel_size > length:
        raise ShapeError(
            f"kernel size {kernel_size} exceeds input length {length} under valid padding"
        )
    return length - kernel_size + 1


def pool_output_length(length: int, pool_size: int) -> int:
    if pool_size > length:
        raise ShapeError(f"pool size {pool_size} exceeds input length {length}")
    return length // pool_size


# ---------------------------------------------------------------------------
# Runtime layers
# ---------------------------------------------------------------------------


class Layer:
    """Base runtime layer; parameterized layers fill ``params``/``grads``."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


class Conv1D(Layer):
    """1D convolution (cross-correlation) at stride 1.

    Kernel shape is (out_channels, in_channels, kernel_size) with one bias per
    output channel. 'valid' padding shrinks the length by kernel_size - 1;
    'same' zero-pads to keep it (see :func:`same_padding`).
    """

    def __init__(self, spec: Conv1DSpec, rng: np.random.Generator):
        super().__init__()
        self.spec = spec
        fan_in = spec.in_channels * spec.kernel_size
        fan_out = spec.out_channels * spec.kernel_size
        limit = _init_limit(spec.init, fan_in, fan_out)
        self.params = {
            "kernel": rng.uniform(-limit, limit, size=(spec.out_channels, spec.in_channels, spec.kernel_size)),
            "bias": np.zeros(spec.out_channels),
        }

    def forward(self, x):
        x3, squeezed = _as_float3(x, "Conv1D")
        n, c, length = x3.shape
        if c != self.spec.in_channels:
            raise ShapeError(
                f"Conv1D expects {self.spec.in_channels} input channels, got {c} (input shape {x3.shape[1:]})"
            )
        conv_output_length(length, self.spec.kernel_size, self.spec.padding)
        if self.spec.padding == "same":
            left, right = same_padding(self.spec.kernel_size)
            xpad = np.pad(x3, ((0, 0), (0, 0), (left, right)))
        else:
            xpad = x3
        out = _correlate(xpad, self.params["kernel"]) + self.params["bias"][:, None]
        self._cache = (xpad, length, squeezed)
        return out[0] if squeezed else out

    def backward(self, grad_out):
        xpad, length, squeezed = self._cache
        kernel = self.params["kernel"]
        k = self.spec.kernel_size
        grad3, _ = _as_float3(grad_out, "Conv1D.backward")
        expected = (xpad.shape[0], self.spec.out_channels, xpad.shape[2] - k + 1)
        if grad3.shape != expected:
            raise ShapeError(f"Conv1D.backward: grad shape {grad3.shape} does not match output {expected}")

        windows = sliding_window_view(xpad, k, axis=2)  # (N, C, L', K)
        self.grads["kernel"] = np.tensordot(grad3, windows, axes=([0, 2], [0, 2]))
        self.grads["bias"] = grad3.sum(axis=(0, 2))

        # Full correlation with the channel-transposed, tap-flipped kernel
        # recovers the gradient w.r.t. the (padded) input.
        gpad = np.pad(grad3, ((0, 0), (0, 0), (k - 1, k - 1)))
        flipped = kernel[:, :, ::-1].transpose(1, 0, 2)  # (C, O, K)
        grad_xpad = _correlate(gpad, np.ascontiguousarray(flipped))
        if self.spec.padding == "same":
            left, _right = same_padding(k)
            grad_x = grad_xpad[:, :, left:left + length]
        else:
            grad_x = grad_xpad
        return grad_x[0] if squeezed else grad_x


class MaxPool1D(Layer):
    """Non-overlapping max pooling; a trailing remainder of L mod p is dropped."""

    def __init__(self, spec: MaxPool1DSpec):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        x3, squeezed = _as_float3(x, "MaxPool1D")
        p = self.spec.pool_size
        n, c, length = x3.shape
        out_len = pool_output_length(length, p)
        windows = x3[:, :, :out_len * p].reshape(n, c, out_len, p)
        argmax = windows.argmax(axis=3)  # ties -> lowest index
        out = np.take_along_axis(windows, argmax[..., None], axis=3)[..., 0]
        self._cache = (argmax, x3.shape, squeezed)
        return out[0] if squeezed else out

    @property
    def last_argmax(self):
        """Window-local argmax indices from the most recent forward call."""
        return self._cache[0]

    def backward(self, grad_out):
        argmax, in_shape, squeezed = self._cache
        p = self.spec.pool_size
        n, c, length = in_shape
        grad3, _ = _as_float3(grad_out, "MaxPool1D.backward")
        if grad3.shape != argmax.shape:
            raise ShapeError(f"MaxPool1D.backward: grad shape {grad3.shape} does not match output {argmax.shape}")
        if argmax.size and (argmax.min() < 0 or argmax.max() >= p):
            raise ShapeError("MaxPool1D.backward: argmax index out of range")
        scatter = np.zeros((n, c, argmax.shape[2], p))
        np.put_along_axis(scatter, argmax[..., None], grad3[..., None], axis=3)
        grad_x = np.zeros(in_shape)
        grad_x[:, :, :argmax.shape[2] * p] = scatter.reshape(n, c, -1)
        return grad_x[0] if squeezed else grad_x


class Dense(Layer):
    """Fully-connected layer: out = W @ x + b with W of shape (m, n)."""

    def __init__(self, spec: DenseSpec, rng: np.random.Generator):
        super().__init__()
        self.spec = spec
        limit = _init_limit(spec.init, spec.in_features, spec.out_features)
        self.params = {
            "weight": rng.uniform(-limit, limit, size=(spec.out_features, spec.in_features)),
            "bias": np.zeros(spec.out_features),
        }

    def forward(self, x):
        x2, squeezed = _as_float2(x, "Dense")
        if x2.shape[1] != self.spec.in_features:
            raise ShapeError(
                f"Dense expects {self.spec.in_features} input features, got {x2.shape[1]}"
            )
        out = x2 @ self.params["weight"].T + self.params["bias"]
        self._cache = (x2, squeezed)
        return out[0] if squeezed else out

    def backward(self, grad_out):
        x2, squeezed = self._cache
        grad2, _ = _as_float2(grad_out, "Dense.backward")
        if grad2.shape != (x2.shape[0], self.spec.out_features):
            raise ShapeError(
                f"Dense.backward: grad shape {grad2.shape} does not match output "
                f"({x2.shape[0]}, {self.spec.out_features})"
            )
        self.grads["weight"] = grad2.T @ x2
        self.grads["bias"] = grad2.sum(axis=0)
        grad_x = grad2 @ self.params["weight"]
        return grad_x[0] if squeezed else grad_x


class Activation(Layer):
    """Elementwise relu or tanh; relu'(0) is pinned to 0."""

    def __init__(self, spec: ActivationSpec):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.spec.kind == "relu":
            out = np.maximum(x, 0.0)
            self._cache = x > 0.0
        else:
            out = np.tanh(x)
            self._cache = out
        return out

    def backward(self, grad_out):
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != self._cache.shape:
            raise ShapeError(
                f"Activation.backward: grad shape {grad_out.shape} does not match output {self._cache.shape}"
            )
        if self.spec.kind == "relu":
            return grad_out * self._cache
        return grad_out * (1.0 - self._cache ** 2)


class Flatten(Layer):
    """Collapse (C, L) to a vector, preserving any batch axis."""

    def __init__(self, spec: FlattenSpec = FlattenSpec()):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        x3, squeezed = _as_float3(x, "Flatten")
        self._cache = (x3.shape, squeezed)
        out = x3.reshape(x3.shape[0], -1)
        return out[0] if squeezed else out

    def backward(self, grad_out):
        shape, squeezed = self._cache
        grad2, _ = _as_float2(grad_out, "Flatten.backward")
        if grad2.shape != (shape[0], shape[1] * shape[2]):
            raise ShapeError(
                f"Flatten.backward: grad shape {grad2.shape} does not match output ({shape[0]}, {shape[1] * shape[2]})"
            )
        grad_x = grad2.reshape(shape)
        return grad_x[0] if squeezed else grad_x


def coord_channel(length: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    """One channel of linearly spaced coordinates, shape (1, length).

    First value is exactly ``low``, last exactly ``high``.
    """
    if length < 2:
        raise ShapeError(f"coordinate channel needs length >= 2, got {length}")
    return np.linspace(low, high, length)[None, :]


class CoordChannel(Layer):
    """Append a coordinate channel so convolutions can see band position."""

    def __init__(self, spec: CoordChannelSpec = CoordChannelSpec()):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        x3, squeezed = _as_float3(x, "CoordChannel")
        coords = coord_channel(x3.shape[2], self.spec.low, self.spec.high)
        coords = np.broadcast_to(coords, (x3.shape[0], 1, x3.shape[2]))
        out = np.concatenate([x3, coords], axis=1)
        self._cache = (x3.shape[1], squeezed)
        return out[0] if squeezed else out

    def backward(self, grad_out):
        in_channels, squeezed = self._cache
        grad3, _ = _as_float3(grad_out, "CoordChannel.backward")
        if grad3.shape[1] != in_channels + 1:
            raise ShapeError(
                f"CoordChannel.backward: grad has {grad3.shape[1]} channels, expected {in_channels + 1}"
            )
        grad_x = grad3[:, :in_channels, :]
        return grad_x[0] if squeezed else grad_x


class IdentityConcat(Layer):
    """Concatenate the flattened network input after the current feature vector.

    Implements the bypass of the residual architecture: conv-stack features
    first, then the raw input vector. The bypass tensor is supplied by the
    network at call time.
    """

    def __init__(self, spec: IdentityConcatSpec = IdentityConcatSpec()):
        super().__init__()
        self.spec = spec

    def forward(self, x, bypass):
        x2, squeezed = _as_float2(x, "IdentityConcat")
        bypass = np.asarray(bypass, dtype=np.float64)
        if squeezed:
            if bypass.ndim != 2:
                raise ShapeError("IdentityConcat: unbatched features need an unbatched (C, L) bypass")
            flat = bypass.reshape(1, -1)
        else:
            if bypass.ndim != 3 or bypass.shape[0] != x2.shape[0]:
                raise ShapeError(
                    f"IdentityConcat: bypass shape {bypass.shape} does not match batch of {x2.shape[0]}"
                )
            flat = bypass.reshape(bypass.shape[0], -1)
        out = np.concatenate([x2, flat], axis=1)
        self._cache = (x2.shape[1], bypass.shape, squeezed)
        return out[0] if squeezed else out

    def backward(self, grad_out):
        width, bypass_shape, squeezed = self._cache
        grad2, _ = _as_float2(grad_out, "IdentityConcat.backward")
        grad_x = grad2[:, :width]
        grad_bypass = grad2[:, width:].reshape(bypass_shape)
        if squeezed:
            return grad_x[0], grad_bypass
        return grad_x, grad_bypass


class SoftmaxOutput(Layer):
    """Terminal softmax over the last axis (numerically stabilized)."""

    def __init__(self, spec: SoftmaxOutputSpec = SoftmaxOutputSpec()):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=-1, keepdims=True)
        self._cache = probs
        return probs

    def backward(self, grad_out):
        probs = self._cache
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != probs.shape:
            raise ShapeError(
                f"SoftmaxOutput.backward: grad shape {grad_out.shape} does not match output {probs.shape}"
            )
        dot = (grad_out * probs).sum(axis=-1, keepdims=True)
        return probs * (grad_out - dot)


def softmax_crossentropy(logits, onehot):
    """Fused softmax + categorical cross-entropy.

    Accepts (K,) or (N, K) logits with matching one-hot targets. Returns
    ``(loss, probs, grad_logits)`` where loss is a scalar for a single sample
    and a per-sample vector for a batch; ``grad_logits = probs - onehot`` in
    both cases (no batch scaling applied here).
    """
    logits2, squeezed = _as_float2(logits, "softmax_crossentropy")
    target2, tsq = _as_float2(onehot, "softmax_crossentropy target")
    if logits2.shape != target2.shape or squeezed != tsq:
        raise ShapeError(
            f"softmax_crossentropy: logits {np.shape(logits)} vs target {np.shape(onehot)} mismatch"
        )
    is_zero = target2 == 0.0
    is_one = target2 == 1.0
    if not np.all(is_zero | is_one) or not np.all(is_one.sum(axis=1) == 1):
        raise ShapeError("softmax_crossentropy: target rows must be one-hot (exactly one 1, rest 0)")

    m = logits2.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(logits2 - m).sum(axis=1, keepdims=True))
    logprobs = logits2 - lse
    probs = np.exp(logprobs)
    losses = -(logprobs[is_one])
    grad = probs - target2
    if squeezed:
        return float(losses[0]), probs[0], grad[0]
    return losses, probs, grad


def build_layer(spec: LayerSpec, rng: np.random.Generator) -> Layer:
    """Instantiate the runtime layer for a declarative spec."""
    if isinstance(spec, Conv1DSpec):
        return Conv1D(spec, rng)
    if isinstance(spec, MaxPool1DSpec):
        return MaxPool1D(spec)
    if isinstance(spec, DenseSpec):
        return Dense(spec, rng)
    if isinstance(spec, ActivationSpec):
        return Activation(spec)
    if isinstance(spec, FlattenSpec):
        return Flatten(spec)
    if isinstance(spec, CoordChannelSpec):
        return CoordChannel(spec)
    if isinstance(spec, IdentityConcatSpec):
        return IdentityConcat(spec)
    if isinstance(spec, SoftmaxOutputSpec):
        return SoftmaxOutput(spec)
    raise ShapeError(f"unknown layer spec {spec!r}")
