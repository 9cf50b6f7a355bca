"""Builders for the seven supported segmentation architectures.

Each builder is a total function of (architecture, input channels, classes);
infeasible combinations (e.g. deep 1D nets on 3 channels, where the valid
convolutions exhaust the sequence) raise ShapeError at build time.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import nn
from .nn import LayerSpec, ModelSpec, WeightBundle


class Architecture(str, Enum):
    LIUETAL = "liuetal"
    JUSTO_LIUNET = "1d-justo-liunet"
    HUETAL = "huetal"
    JUSTO_HUNET = "1d-justo-hunet"
    LUCAS_CNN = "lucascnn"
    JUSTO_LUCAS_CNN = "1d-justo-lucascnn"
    JUSTO_UNET_SIMPLE = "2d-justo-unet-simple"


_ALIASES = {
    "liuetal": Architecture.LIUETAL,
    "1d-justo-liunet": Architecture.JUSTO_LIUNET,
    "huetal": Architecture.HUETAL,
    "1d-justo-hunet": Architecture.JUSTO_HUNET,
    "lucascnn": Architecture.LUCAS_CNN,
    "1d-justo-lucascnn": Architecture.JUSTO_LUCAS_CNN,
    "2d-justo-unet-simple": Architecture.JUSTO_UNET_SIMPLE,
}


def parse_architecture(name: str) -> Architecture:
    """Accepts canonical lowercase-hyphen ids and the published display names."""
    key = name.strip().lower().replace("_", "-").replace(" ", "-")
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValueError(
        f"unknown architecture {name!r}; expected one of {sorted(_ALIASES)}"
    )


def _conv_pool_stack(counts: list[int], kernel: int, activation: str) -> list[LayerSpec]:
    layers: list[LayerSpec] = []
    for n in counts:
        layers.append(LayerSpec(nn.CONV1D, units=n, kernel=kernel, activation=activation))
        layers.append(LayerSpec(nn.MAXPOOL1D))
    return layers


def build(arch: Architecture | str, in_channels: int, classes: int) -> ModelSpec:
    """Construct and shape-validate the named architecture."""
    arch = parse_architecture(arch if isinstance(arch, str) else arch.value)
    if in_channels < 1:
        raise ValueError("in_channels must be >= 1")
    if classes < 2:
        raise ValueError("classes must be >= 2")

    if arch == Architecture.JUSTO_LIUNET:
        layers = _conv_pool_stack([6, 12, 18, 24], kernel=6, activation=nn.RELU)
        layers += [LayerSpec(nn.FLATTEN), LayerSpec(nn.DENSE, units=classes, activation=nn.SOFTMAX)]
    elif arch == Architecture.LIUETAL:
        layers = _conv_pool_stack([32, 32, 64, 64], kernel=3, activation=nn.RELU)
        layers += [LayerSpec(nn.FLATTEN), LayerSpec(nn.DENSE, units=classes, activation=nn.SOFTMAX)]
    elif arch == Architecture.HUETAL:
        layers = _conv_pool_stack([20], kernel=12, activation=nn.TANH)
        layers += [
            LayerSpec(nn.FLATTEN),
            LayerSpec(nn.DENSE, units=100, activation=nn.TANH),
            LayerSpec(nn.DENSE, units=classes, activation=nn.SOFTMAX),
        ]
    elif arch == Architecture.JUSTO_HUNET:
        layers = _conv_pool_stack([6], kernel=9, activation=nn.TANH)
        layers += [
            LayerSpec(nn.FLATTEN),
            LayerSpec(nn.DENSE, units=30, activation=nn.RELU),
            LayerSpec(nn.DENSE, units=classes, activation=nn.SOFTMAX),
        ]
    elif arch == Architecture.LUCAS_CNN:
        layers = _conv_pool_stack([32, 32, 64, 64], kernel=3, activation=nn.RELU)
        layers += [
            LayerSpec(nn.FLATTEN),
            LayerSpec(nn.DENSE, units=120, activation=nn.RELU),
            LayerSpec(nn.DENSE, units=160, activation=nn.RELU),
            LayerSpec(nn.DENSE, units=classes, activation=nn.SOFTMAX),
        ]
    elif arch == Architecture.JUSTO_LUCAS_CNN:
        layers = _conv_pool_stack([16], kernel=9, activation=nn.TANH)
        layers += [
            LayerSpec(nn.FLATTEN),
            LayerSpec(nn.DENSE, units=30, activation=nn.TANH),
            LayerSpec(nn.DENSE, units=5, activation=nn.TANH),
            LayerSpec(nn.DENSE, units=classes, activation=nn.SOFTMAX),
        ]
    elif arch == Architecture.JUSTO_UNET_SIMPLE:
        # Two-scale encoder-decoder, no skip connections; batch norm follows
        # every convolution (the output one included) and carries the
        # activation, so the order is conv -> norm -> activation.
        def block(units: int, activation: str) -> list[LayerSpec]:
            return [
                LayerSpec(nn.CONV2D, units=units, kernel=3, padding="same"),
                LayerSpec(nn.BATCHNORM, activation=activation),
            ]

        layers = (
            block(6, nn.RELU)
            + [LayerSpec(nn.MAXPOOL2D)]
            + block(12, nn.RELU)
            + [LayerSpec(nn.MAXPOOL2D), LayerSpec(nn.UPSAMPLE2D)]
            + block(6, nn.RELU)
            + [LayerSpec(nn.UPSAMPLE2D)]
            + block(classes, nn.SOFTMAX)
        )
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unhandled architecture {arch}")

    spec = ModelSpec(tuple(layers), in_channels, classes)
    nn.validate_spec(spec)
    return spec


def init_weights(spec: ModelSpec, seed: int = 0) -> WeightBundle:
    """Glorot-uniform kernels, zero biases, identity batch norm; seed-deterministic."""
    rng = np.random.default_rng(seed)
    bundle = WeightBundle()
    for _, layer, shapes in nn.layer_param_shapes(spec):
        for name, shape in shapes.items():
            if name.endswith(".kernel") or name.endswith(".weight"):
                bundle[name] = _glorot(rng, layer, shape)
            elif name.endswith((".beta", ".moving_mean", ".bias")):
                bundle[name] = np.zeros(shape, dtype=np.float32)
            else:  # gamma, moving_variance
                bundle[name] = np.ones(shape, dtype=np.float32)
    return bundle


def _glorot(rng: np.random.Generator, layer: LayerSpec, shape: tuple[int, ...]) -> np.ndarray:
    if layer.kind == nn.CONV1D:
        cout, cin, k = shape
        fan_in, fan_out = cin * k, cout * k
    elif layer.kind == nn.CONV2D:
        cout, cin, k, _ = shape
        fan_in, fan_out = cin * k * k, cout * k * k
    else:  # dense
        fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)
