"""Reading Keras HDF5 checkpoints into an ordered layer/weight structure.

Handles the legacy whole-model layout (root group ``model_weights`` with a
``layer_names`` attribute) and weights-only files using the same layout at
the root.  Weight arrays are returned exactly as stored (float32
passthrough); interpretation happens in `detect` and `export`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import h5py
import numpy as np

CONV1D = "conv1d"
CONV2D = "conv2d"
DENSE = "dense"
BATCHNORM = "batchnorm"

_BN_SUFFIXES = ("gamma", "beta", "moving_mean", "moving_variance")


@dataclass
class SourceLayer:
    """One parameterized checkpoint layer in model order."""

    name: str
    kind: str
    weights: dict[str, np.ndarray]   # canonical role -> array (kernel/bias or bn vectors)
    weight_paths: dict[str, str]     # canonical role -> path inside the h5 file


def _decode(name) -> str:
    return name.decode("utf-8") if isinstance(name, bytes) else str(name)


def _classify(names_arrays: list[tuple[str, np.ndarray]], layer_name: str) -> SourceLayer:
    suffix_map = {}
    for path, arr in names_arrays:
        leaf = path.rsplit("/", 1)[-1].split(":")[0]
        suffix_map[leaf] = (path, arr)
    if set(_BN_SUFFIXES) <= set(suffix_map):
        weights = {k: suffix_map[k][1] for k in _BN_SUFFIXES}
        paths = {k: suffix_map[k][0] for k in _BN_SUFFIXES}
        return SourceLayer(layer_name, BATCHNORM, weights, paths)
    if "kernel" in suffix_map:
        kernel_path, kernel = suffix_map["kernel"]
        bias_path, bias = suffix_map.get("bias", (None, None))
        if bias is None:
            raise ValueError(f"layer {layer_name}: kernel without bias is unsupported")
        kind = {3: CONV1D, 4: CONV2D, 2: DENSE}.get(kernel.ndim)
        if kind is None:
            raise ValueError(f"layer {layer_name}: kernel of rank {kernel.ndim} is unsupported")
        return SourceLayer(
            layer_name, kind,
            {"kernel": kernel, "bias": bias},
            {"kernel": kernel_path, "bias": bias_path},
        )
    raise ValueError(
        f"layer {layer_name}: unrecognized weight set {sorted(suffix_map)}"
    )


def read_checkpoint(path: str) -> list[SourceLayer]:
    """Ordered parameterized layers of a Keras .h5 checkpoint."""
    with h5py.File(path, "r") as f:
        root = f["model_weights"] if "model_weights" in f else f
        if "layer_names" not in root.attrs:
            raise ValueError(f"{path}: no Keras layer_names attribute; not a checkpoint?")
        layers: list[SourceLayer] = []
        for raw_name in root.attrs["layer_names"]:
            name = _decode(raw_name)
            group = root[name]
            weight_names = [_decode(w) for w in group.attrs.get("weight_names", [])]
            if not weight_names:
                continue  # pools, flatten, activations carry no weights
            pairs = [(w, np.asarray(group[w])) for w in weight_names]
            layers.append(_classify(pairs, name))
    return layers


def declared_input_length(path: str) -> int | None:
    """Sequence length declared by the model config, when the file carries one.

    Needed because floor pooling maps neighboring input lengths to identical
    weight shapes, so the length is not always recoverable from weights alone.
    """
    with h5py.File(path, "r") as f:
        raw = f.attrs.get("model_config")
    if raw is None:
        return None
    try:
        config = json.loads(_decode(raw))
        first = config["config"]["layers"][0]["config"]
        shape = first.get("batch_shape") or first.get("batch_input_shape")
        if shape and len(shape) >= 2 and shape[1] is not None:
            return int(shape[1])
    except (KeyError, IndexError, TypeError, ValueError):
        return None
    return None
