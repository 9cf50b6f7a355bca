"""Checkpoint -> JWB1 conversion with axis transposition to canonical layouts.

Transpositions (Keras-native -> canonical):

* Conv1D kernel  (K, Cin, Cout)    -> (Cout, Cin, K)      via (2, 1, 0)
* Conv2D kernel  (K, K, Cin, Cout) -> (Cout, Cin, K, K)   via (3, 2, 0, 1)
* Dense kernel   (In, Out)         -> (Out, In)           via (1, 0)
* Batch norm vectors pass through, reordered gamma, beta, moving_mean,
  moving_variance regardless of source ordering.

Values are float32 passthrough: nothing is recomputed, only permuted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .architectures import template
from .detect import Detection, detect
from .formats import write_jwb
from .hdf5 import BATCHNORM, SourceLayer, declared_input_length, read_checkpoint

TRANSPOSES = {
    "conv1d": (2, 1, 0),
    "conv2d": (3, 2, 0, 1),
    "dense": (1, 0),
}

INVERSE_TRANSPOSES = {
    "conv1d": (2, 1, 0),
    "conv2d": (2, 3, 1, 0),
    "dense": (1, 0),
}

_BN_ORDER = ("gamma", "beta", "moving_mean", "moving_variance")


@dataclass
class ExportManifest:
    source: str
    architecture: str
    in_channels: int
    classes: int
    records: list[dict]

    def write(self, path: str | Path) -> None:
        lines = [json.dumps({
            "source": self.source,
            "architecture": self.architecture,
            "in_channels": self.in_channels,
            "classes": self.classes,
        })]
        lines += [json.dumps(r) for r in self.records]
        Path(path).write_text("\n".join(lines) + "\n")


def canonical_records(
    layers: list[SourceLayer], detection: Detection
) -> tuple[list[tuple[str, np.ndarray]], list[dict]]:
    """JWB1 (name, tensor) records plus manifest rows, in engine layer order."""
    tmpl = template(detection.architecture, detection.in_channels, detection.classes)
    records: list[tuple[str, np.ndarray]] = []
    rows: list[dict] = []
    for layer, expected in zip(layers, tmpl):
        if layer.kind == BATCHNORM:
            roles = [(role, role) for role in _BN_ORDER]
        else:
            roles = [("kernel", "kernel" if layer.kind != "dense" else "weight"),
                     ("bias", "bias")]
        for src_role, dst_role in roles:
            tensor = layer.weights[src_role]
            perm = TRANSPOSES.get(layer.kind) if src_role == "kernel" else None
            out = np.transpose(tensor, perm) if perm else tensor
            name = f"{expected.jwb_prefix}.{dst_role}"
            records.append((name, np.ascontiguousarray(out, dtype=np.float32)))
            rows.append({
                "record": name,
                "source_layer": layer.name,
                "source_weight": layer.weight_paths[src_role],
                "source_shape": list(tensor.shape),
                "canonical_shape": list(out.shape),
                "transpose": list(perm) if perm else None,
            })
    return records, rows


def export(checkpoint: str | Path, out: str | Path) -> ExportManifest:
    """Convert one checkpoint; returns the manifest describing every record."""
    layers = read_checkpoint(str(checkpoint))
    detection = detect(layers, declared_input_length(str(checkpoint)))
    records, rows = canonical_records(layers, detection)
    write_jwb(out, detection.architecture, detection.in_channels, detection.classes, records)
    return ExportManifest(
        str(checkpoint), detection.architecture, detection.in_channels,
        detection.classes, rows,
    )
