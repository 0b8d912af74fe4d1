"""The five 1D CNN architectures, their shape traces, and parameter counts.

Each architecture is produced as a declarative :class:`NetworkSpec` (an
ordered tuple of layer specs). Hyperparameters are pinned per architecture:

===============  ======  ======  ======  ====  ==========  =========
architecture     epochs  batch   kernel  pool  activation  padding
===============  ======  ======  ======  ====  ==========  =========
lucas_cnn           150     100       3     2  relu        valid
lucas_resnet        120      64       3     2  relu        same
lucas_coordconv     120      32       3     2  relu        valid
hu2015              200     100      28     6  tanh        valid
liu2018             235     100       3     2  relu        valid
===============  ======  ======  ======  ====  ==========  =========

Weight init follows the activation: He-uniform before relu, Glorot-uniform
before tanh and for the softmax logits layer; biases start at zero.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ShapeError
from .layers import (
    ActivationSpec,
    Conv1DSpec,
    CoordChannelSpec,
    DenseSpec,
    FlattenSpec,
    IdentityConcatSpec,
    LayerSpec,
    MaxPool1DSpec,
    SoftmaxOutputSpec,
    conv_output_length,
    pool_output_length,
)


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative network: immutable after build, safe to share."""

    name: str
    layers: tuple[LayerSpec, ...]
    input_length: int = 256
    n_classes: int = 4


#: Table-pinned training defaults: architecture -> (epochs, batch_size).
TRAIN_DEFAULTS = {
    "lucas_cnn": (150, 100),
    "lucas_resnet": (120, 64),
    "lucas_coordconv": (120, 32),
    "hu2015": (200, 100),
    "liu2018": (235, 100),
}

ARCHITECTURE_NAMES = tuple(TRAIN_DEFAULTS)


def _conv_blocks(filters, in_channels, kernel_size, pool_size, activation, padding):
    init = "he_uniform" if activation == "relu" else "glorot_uniform"
    layers = []
    channels = in_channels
    for n_filters in filters:
        layers += [
            Conv1DSpec(channels, n_filters, kernel_size, padding, init),
            ActivationSpec(activation),
            MaxPool1DSpec(pool_size),
        ]
        channels = n_filters
    return layers, channels


def _conv_stack_length(input_length, n_blocks, kernel_size, pool_size, padding):
    length = input_length
    for _ in range(n_blocks):
        length = conv_output_length(length, kernel_size, padding)
        length = pool_output_length(length, pool_size)
    return length


def _head(in_features, fc_units, activation, n_classes):
    init = "he_uniform" if activation == "relu" else "glorot_uniform"
    layers = []
    width = in_features
    for units in fc_units:
        layers += [DenseSpec(width, units, init), ActivationSpec(activation)]
        width = units
    layers += [DenseSpec(width, n_classes, "glorot_uniform"), SoftmaxOutputSpec()]
    return layers


def build(name: str, input_length: int = 256, n_classes: int = 4) -> NetworkSpec:
    """Build the named architecture for the given input length and class count."""
    if name == "lucas_cnn":
        conv, channels = _conv_blocks([32, 32, 64, 64], 1, 3, 2, "relu", "valid")
        length = _conv_stack_length(input_length, 4, 3, 2, "valid")
        layers = conv + [FlattenSpec()] + _head(channels * length, [120, 160], "relu", n_classes)
    elif name == "lucas_resnet":
        conv, channels = _conv_blocks([32, 32, 64, 64], 1, 3, 2, "relu", "same")
        length = _conv_stack_length(input_length, 4, 3, 2, "same")
        flat = channels * length
        layers = (
            conv
            + [FlattenSpec(), IdentityConcatSpec()]
            + _head(flat + input_length, [150, 100], "relu", n_classes)
        )
    elif name == "lucas_coordconv":
        conv, channels = _conv_blocks([32, 64, 64, 128], 2, 3, 2, "relu", "valid")
        length = _conv_stack_length(input_length, 4, 3, 2, "valid")
        layers = (
            [CoordChannelSpec()]
            + conv
            + [FlattenSpec()]
            + _head(channels * length, [256, 128], "relu", n_classes)
        )
    elif name == "hu2015":
        conv, channels = _conv_blocks([20], 1, 28, 6, "tanh", "valid")
        length = _conv_stack_length(input_length, 1, 28, 6, "valid")
        layers = conv + [FlattenSpec()] + _head(channels * length, [100], "tanh", n_classes)
    elif name == "liu2018":
        conv, channels = _conv_blocks([32, 32, 64, 64], 1, 3, 2, "relu", "valid")
        length = _conv_stack_length(input_length, 4, 3, 2, "valid")
        layers = conv + [FlattenSpec()] + _head(channels * length, [], "relu", n_classes)
    else:
        raise ShapeError(f"unknown architecture {name!r}; expected one of {ARCHITECTURE_NAMES}")
    return NetworkSpec(name=name, layers=tuple(layers), input_length=input_length, n_classes=n_classes)


def trace_shapes(spec: NetworkSpec) -> list[tuple[LayerSpec, tuple[int, ...]]]:
    """Shape after each layer, starting from a (1, input_length) spectrum.

    Raises :class:`ShapeError` naming the offending layer if the chain is
    inconsistent or any length becomes non-positive.
    """
    shape: tuple[int, ...] = (1, spec.input_length)
    trace = []
    for i, layer in enumerate(spec.layers):
        where = f"layer {i} ({type(layer).__name__})"
        try:
            if isinstance(layer, Conv1DSpec):
                if len(shape) != 2 or shape[0] != layer.in_channels:
                    raise ShapeError(f"expects {layer.in_channels} channels, have shape {shape}")
                shape = (layer.out_channels, conv_output_length(shape[1], layer.kernel_size, layer.padding))
            elif isinstance(layer, MaxPool1DSpec):
                if len(shape) != 2:
                    raise ShapeError(f"expects (C, L) input, have shape {shape}")
                shape = (shape[0], pool_output_length(shape[1], layer.pool_size))
            elif isinstance(layer, ActivationSpec) or isinstance(layer, SoftmaxOutputSpec):
                pass
            elif isinstance(layer, FlattenSpec):
                if len(shape) != 2:
                    raise ShapeError(f"expects (C, L) input, have shape {shape}")
                shape = (shape[0] * shape[1],)
            elif isinstance(layer, CoordChannelSpec):
                if len(shape) != 2 or shape[1] < 2:
                    raise ShapeError(f"needs (C, L>=2) input, have shape {shape}")
                shape = (shape[0] + 1, shape[1])
            elif isinstance(layer, IdentityConcatSpec):
                if len(shape) != 1:
                    raise ShapeError(f"expects a flat vector, have shape {shape}")
                shape = (shape[0] + spec.input_length,)
            elif isinstance(layer, DenseSpec):
                if shape != (layer.in_features,):
                    raise ShapeError(f"expects ({layer.in_features},) input, have shape {shape}")
                shape = (layer.out_features,)
            else:
                raise ShapeError("unknown layer spec")
        except ShapeError as err:
            raise ShapeError(f"{spec.name}: {where}: {err}") from None
        if any(d <= 0 for d in shape):
            raise ShapeError(f"{spec.name}: {where}: non-positive shape {shape}")
        trace.append((layer, shape))
    if shape != (spec.n_classes,):
        raise ShapeError(f"{spec.name}: final shape {shape} is not ({spec.n_classes},)")
    return trace


def param_count(spec: NetworkSpec) -> int:
    """Total number of trainable scalars (kernels/weights plus biases)."""
    trace_shapes(spec)  # reject inconsistent specs
    total = 0
    for layer in spec.layers:
        if isinstance(layer, Conv1DSpec):
            total += layer.out_channels * layer.in_channels * layer.kernel_size + layer.out_channels
        elif isinstance(layer, DenseSpec):
            total += layer.out_features * layer.in_features + layer.out_features
    return total


def architecture_card(name: str, input_length: int = 256, n_classes: int = 4) -> str:
    """One-page text card: hyperparameters, shape trace, per-layer parameters."""
    spec = build(name, input_length, n_classes)
    epochs, batch = TRAIN_DEFAULTS[name]
    lines = [
        f"# {name}",
        "",
        f"input: (1, {input_length})  classes: {n_classes}",
        f"training defaults: {epochs} epochs, batch size {batch}",
        "",
        "| # | layer | output shape | params |",
        "|---|-------|--------------|--------|",
    ]
    total = 0
    for i, (layer, shape) in enumerate(trace_shapes(spec)):
        if isinstance(layer, Conv1DSpec):
            desc = f"Conv1D {layer.in_channels}->{layer.out_channels} k{layer.kernel_size} {layer.padding}"
            n = layer.out_channels * layer.in_channels * layer.kernel_size + layer.out_channels
        elif isinstance(layer, DenseSpec):
            desc = f"Dense {layer.in_features}->{layer.out_features}"
            n = layer.out_features * layer.in_features + layer.out_features
        elif isinstance(layer, MaxPool1DSpec):
            desc, n = f"MaxPool1D p{layer.pool_size}", 0
        elif isinstance(layer, ActivationSpec):
            desc, n = layer.kind, 0
        elif isinstance(layer, FlattenSpec):
            desc, n = "Flatten", 0
        elif isinstance(layer, CoordChannelSpec):
            desc, n = "CoordChannel", 0
        elif isinstance(layer, IdentityConcatSpec):
            desc, n = "IdentityConcat (input bypass)", 0
        else:
            desc, n = "Softmax", 0
        total += n
        shape_txt = "x".join(str(d) for d in shape)
        lines.append(f"| {i} | {desc} | {shape_txt} | {n or ''} |")
    lines += ["", f"total parameters: {total}"]
    return "\n".join(lines) + "\n"
