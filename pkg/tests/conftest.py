"""Shared test helpers: synthetic data generators and shrunk model variants."""

from __future__ import annotations

import numpy as np

from hsiseg import nn
from hsiseg.nn import LayerSpec, ModelSpec


def separable_spectra(
    n_per_class: int, channels: int, seed: int, noise: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """Three well-separated synthetic spectral classes: ramp down, bump, ramp up."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, channels)
    templates = np.stack([
        1.0 - t,
        np.exp(-((t - 0.5) ** 2) / 0.02),
        t,
    ])
    xs, ys = [], []
    for k, template in enumerate(templates):
        xs.append(template + noise * rng.normal(size=(n_per_class, channels)))
        ys.append(np.full(n_per_class, k))
    x = np.concatenate(xs).astype(np.float32)
    y = np.concatenate(ys)
    perm = rng.permutation(len(y))
    return x[perm], y[perm]


def gaussian_blobs(
    n_per_class: int, channels: int, seed: int, spread: float = 5.0
) -> tuple[np.ndarray, np.ndarray]:
    """Three unit-variance Gaussian blobs with means far apart."""
    rng = np.random.default_rng(seed)
    means = np.zeros((3, channels))
    means[0, 0] = -spread
    means[1, 0] = spread
    means[2, min(1, channels - 1)] = spread
    xs, ys = [], []
    for k in range(3):
        xs.append(means[k] + rng.normal(size=(n_per_class, channels)))
        ys.append(np.full(n_per_class, k))
    return np.concatenate(xs), np.concatenate(ys)


def random_label_map(height: int, width: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 3, size=(height, width)).astype(np.uint8)


def shrunk_liunet_16() -> ModelSpec:
    """Structure-preserving reduction of the K=6 conv/pool family to 16 channels."""
    return ModelSpec((
        LayerSpec(nn.CONV1D, units=6, kernel=6, activation=nn.RELU),
        LayerSpec(nn.MAXPOOL1D),
        LayerSpec(nn.FLATTEN),
        LayerSpec(nn.DENSE, units=3, activation=nn.SOFTMAX),
    ), 16, 3)


def _stack(counts: list[int], kernel: int, activation: str) -> list[LayerSpec]:
    layers: list[LayerSpec] = []
    for n in counts:
        layers.append(LayerSpec(nn.CONV1D, units=n, kernel=kernel, activation=activation))
        layers.append(LayerSpec(nn.MAXPOOL1D))
    return layers


def _unet_block(units: int, activation: str) -> list[LayerSpec]:
    return [
        LayerSpec(nn.CONV2D, units=units, kernel=3, padding="same"),
        LayerSpec(nn.BATCHNORM, activation=activation),
    ]


def shrunk_variants() -> dict[str, ModelSpec]:
    """Small models preserving each architecture's layer kinds and order.

    The published 1D nets need ~112 input channels for their valid
    convolutions; these variants reduce depth/width so gradient checks stay
    cheap while every layer kind is exercised.
    """
    dense = lambda units, act: LayerSpec(nn.DENSE, units=units, activation=act)
    flat = LayerSpec(nn.FLATTEN)
    variants = {
        "liuetal": ModelSpec(
            tuple(_stack([8, 8], 3, nn.RELU)) + (flat, dense(3, nn.SOFTMAX)), 32, 3
        ),
        "1d-justo-liunet": ModelSpec(
            tuple(_stack([6, 12], 6, nn.RELU)) + (flat, dense(3, nn.SOFTMAX)), 32, 3
        ),
        "huetal": ModelSpec(
            tuple(_stack([8], 12, nn.TANH))
            + (flat, dense(20, nn.TANH), dense(3, nn.SOFTMAX)),
            32, 3,
        ),
        "1d-justo-hunet": ModelSpec(
            tuple(_stack([6], 9, nn.TANH))
            + (flat, dense(10, nn.RELU), dense(3, nn.SOFTMAX)),
            32, 3,
        ),
        "lucascnn": ModelSpec(
            tuple(_stack([8, 8], 3, nn.RELU))
            + (flat, dense(12, nn.RELU), dense(16, nn.RELU), dense(3, nn.SOFTMAX)),
            32, 3,
        ),
        "1d-justo-lucascnn": ModelSpec(
            tuple(_stack([8], 9, nn.TANH))
            + (flat, dense(10, nn.TANH), dense(5, nn.TANH), dense(3, nn.SOFTMAX)),
            32, 3,
        ),
        "2d-justo-unet-simple": ModelSpec(
            tuple(
                _unet_block(4, nn.RELU)
                + [LayerSpec(nn.MAXPOOL2D)]
                + _unet_block(6, nn.RELU)
                + [LayerSpec(nn.MAXPOOL2D), LayerSpec(nn.UPSAMPLE2D)]
                + _unet_block(4, nn.RELU)
                + [LayerSpec(nn.UPSAMPLE2D)]
                + _unet_block(3, nn.SOFTMAX)
            ),
            3, 3,
        ),
    }
    return variants
