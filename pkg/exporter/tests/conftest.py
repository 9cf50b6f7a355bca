"""Keras builders for the supported architectures, with randomized weights."""

from __future__ import annotations

import os

import numpy as np

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

import keras  # noqa: E402  (env var must precede the import)
from keras import layers  # noqa: E402


def _conv_pool_stack(widths, kernel, activation):
    out = []
    for n in widths:
        out.append(layers.Conv1D(n, kernel, activation=activation))
        out.append(layers.MaxPooling1D(2))
    return out


def build_keras_model(arch: str, channels: int, classes: int) -> keras.Model:
    if arch == "1d-justo-liunet":
        body = _conv_pool_stack([6, 12, 18, 24], 6, "relu")
        head = [layers.Flatten(), layers.Dense(classes, activation="softmax")]
    elif arch == "liuetal":
        body = _conv_pool_stack([32, 32, 64, 64], 3, "relu")
        head = [layers.Flatten(), layers.Dense(classes, activation="softmax")]
    elif arch == "huetal":
        body = _conv_pool_stack([20], 12, "tanh")
        head = [layers.Flatten(), layers.Dense(100, activation="tanh"),
                layers.Dense(classes, activation="softmax")]
    elif arch == "1d-justo-hunet":
        body = _conv_pool_stack([6], 9, "tanh")
        head = [layers.Flatten(), layers.Dense(30, activation="relu"),
                layers.Dense(classes, activation="softmax")]
    elif arch == "lucascnn":
        body = _conv_pool_stack([32, 32, 64, 64], 3, "relu")
        head = [layers.Flatten(), layers.Dense(120, activation="relu"),
                layers.Dense(160, activation="relu"),
                layers.Dense(classes, activation="softmax")]
    elif arch == "1d-justo-lucascnn":
        body = _conv_pool_stack([16], 9, "tanh")
        head = [layers.Flatten(), layers.Dense(30, activation="tanh"),
                layers.Dense(5, activation="tanh"),
                layers.Dense(classes, activation="softmax")]
    elif arch == "2d-justo-unet-simple":
        def block(units, activation):
            return [
                layers.Conv2D(units, 3, padding="same"),
                layers.BatchNormalization(momentum=0.99, epsilon=1e-3),
                layers.Activation(activation),
            ]
        body = (
            block(6, "relu") + [layers.MaxPooling2D(2)]
            + block(12, "relu") + [layers.MaxPooling2D(2), layers.UpSampling2D(2)]
            + block(6, "relu") + [layers.UpSampling2D(2)]
        )
        head = block(classes, "softmax")
        return keras.Sequential([keras.Input((48, 48, channels))] + body + head)
    else:
        raise ValueError(arch)
    return keras.Sequential([keras.Input((channels, 1))] + body + head)


def randomize_weights(model: keras.Model, seed: int) -> None:
    """Nontrivial values everywhere, moving variances strictly positive."""
    rng = np.random.default_rng(seed)
    new = []
    for var, value in zip(model.weights, model.get_weights()):
        name = var.path if hasattr(var, "path") else var.name
        if "moving_variance" in name:
            new.append(rng.uniform(0.5, 2.0, size=value.shape).astype(np.float32))
        elif "gamma" in name:
            new.append(rng.uniform(0.5, 1.5, size=value.shape).astype(np.float32))
        else:
            new.append(rng.uniform(-0.5, 0.5, size=value.shape).astype(np.float32))
    model.set_weights(new)
