"""Shape templates of the supported architectures for structural detection.

A template describes, for one architecture at (in_channels, classes), the
expected sequence of parameterized layers in checkpoint order: their kind,
their Keras-native kernel shapes, and the JWB1 record names the engine
expects (which encode the full layer index, pools and flatten included).
"""

from __future__ import annotations

from dataclasses import dataclass

from .hdf5 import BATCHNORM, CONV1D, CONV2D, DENSE


@dataclass(frozen=True)
class LayerTemplate:
    kind: str
    keras_shapes: dict[str, tuple[int, ...]]  # role -> expected source shape
    jwb_prefix: str                            # e.g. "L00.conv1d"


def _conv1d(k: int, cin: int, cout: int, index: int) -> LayerTemplate:
    return LayerTemplate(
        CONV1D,
        {"kernel": (k, cin, cout), "bias": (cout,)},
        f"L{index:02d}.conv1d",
    )


def _conv2d(k: int, cin: int, cout: int, index: int) -> LayerTemplate:
    return LayerTemplate(
        CONV2D,
        {"kernel": (k, k, cin, cout), "bias": (cout,)},
        f"L{index:02d}.conv2d",
    )


def _dense(n_in: int, n_out: int, index: int) -> LayerTemplate:
    return LayerTemplate(
        DENSE,
        {"kernel": (n_in, n_out), "bias": (n_out,)},
        f"L{index:02d}.dense",
    )


def _bn(c: int, index: int) -> LayerTemplate:
    vec = (c,)
    return LayerTemplate(
        BATCHNORM,
        {"gamma": vec, "beta": vec, "moving_mean": vec, "moving_variance": vec},
        f"L{index:02d}.batchnorm",
    )


def _chain_length(length: int, kernels: list[int]) -> int:
    """Sequence length after each valid conv (K) + floor pool(2) block."""
    for k in kernels:
        if length < k:
            return -1
        length = (length - k + 1) // 2
        if length < 1:
            return -1
    return length


def template(arch: str, in_channels: int, classes: int) -> list[LayerTemplate] | None:
    """Expected layer sequence, or None when the combination is infeasible."""
    if arch == "1d-justo-liunet":
        widths, k = [6, 12, 18, 24], 6
    elif arch == "liuetal":
        widths, k = [32, 32, 64, 64], 3
    elif arch == "lucascnn":
        widths, k = [32, 32, 64, 64], 3
    elif arch == "huetal":
        widths, k = [20], 12
    elif arch == "1d-justo-hunet":
        widths, k = [6], 9
    elif arch == "1d-justo-lucascnn":
        widths, k = [16], 9
    elif arch == "2d-justo-unet-simple":
        seq = []
        cin = in_channels
        for idx, cout in zip((0, 3, 7, 10), (6, 12, 6, classes)):
            seq.append(_conv2d(3, cin, cout, idx))
            seq.append(_bn(cout, idx + 1))
            cin = cout
        return seq
    else:
        raise ValueError(f"unknown architecture {arch!r}")

    final_len = _chain_length(in_channels, [k] * len(widths))
    if final_len < 1:
        return None
    seq = []
    cin = 1
    for i, cout in enumerate(widths):
        seq.append(_conv1d(k, cin, cout, 2 * i))
        cin = cout
    flat = final_len * widths[-1]
    dense_start = 2 * len(widths) + 1  # pools interleave convs; flatten precedes
    heads = {
        "1d-justo-liunet": [classes],
        "liuetal": [classes],
        "huetal": [100, classes],
        "1d-justo-hunet": [30, classes],
        "lucascnn": [120, 160, classes],
        "1d-justo-lucascnn": [30, 5, classes],
    }[arch]
    n_in = flat
    for j, n_out in enumerate(heads):
        seq.append(_dense(n_in, n_out, dense_start + j))
        n_in = n_out
    return seq


ARCHITECTURES = (
    "liuetal",
    "1d-justo-liunet",
    "huetal",
    "1d-justo-hunet",
    "lucascnn",
    "1d-justo-lucascnn",
    "2d-justo-unet-simple",
)

MAX_INPUT_CHANNELS = 4096
