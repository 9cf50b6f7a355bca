"""Structural architecture detection from checkpoint weight shapes.

Checkpoint layer names are framework-generated and unstable, so matching is
purely structural: the ordered sequence of parameterized layers and their
tensor shapes must equal one architecture template exactly.  For 1D nets
the input channel count is not stored in the weights; it is recovered by
scanning for the sequence length whose conv/pool arithmetic reproduces the
observed flatten width.
"""

from __future__ import annotations

from dataclasses import dataclass

from .architectures import ARCHITECTURES, MAX_INPUT_CHANNELS, template
from .hdf5 import CONV1D, CONV2D, DENSE, SourceLayer


@dataclass(frozen=True)
class Detection:
    architecture: str
    in_channels: int
    classes: int


class UnrecognizedArchitecture(ValueError):
    pass


def _shapes_match(layers: list[SourceLayer], tmpl) -> bool:
    if len(layers) != len(tmpl):
        return False
    for layer, expected in zip(layers, tmpl):
        if layer.kind != expected.kind:
            return False
        for role, shape in expected.keras_shapes.items():
            if role not in layer.weights or tuple(layer.weights[role].shape) != shape:
                return False
    return True


def _candidate_params(arch: str, layers: list[SourceLayer]) -> list[tuple[int, int]]:
    """Possible (in_channels, classes) readings of the observed shapes."""
    if arch == "2d-justo-unet-simple":
        convs = [l for l in layers if l.kind == CONV2D]
        if not convs:
            return []
        cin = convs[0].weights["kernel"].shape[2]
        classes = convs[-1].weights["kernel"].shape[3]
        return [(int(cin), int(classes))]
    denses = [l for l in layers if l.kind == DENSE]
    convs = [l for l in layers if l.kind == CONV1D]
    if not denses or not convs:
        return []
    classes = int(denses[-1].weights["kernel"].shape[1])
    flat = int(denses[0].weights["kernel"].shape[0])
    out = []
    for length in range(1, MAX_INPUT_CHANNELS + 1):
        tmpl = template(arch, length, classes)
        if tmpl is None:
            continue
        first_dense = next(t for t in tmpl if t.kind == DENSE)
        if first_dense.keras_shapes["kernel"][0] == flat:
            out.append((length, classes))
    return out


def detect(layers: list[SourceLayer], declared_length: int | None = None) -> Detection:
    """Match the checkpoint against every known architecture; exactly one must fit.

    Floor pooling can map adjacent 1D input lengths to identical weight
    shapes; `declared_length` (from the checkpoint's model config, when
    present) resolves that, otherwise the smallest feasible length wins.
    """
    matches = []
    for arch in ARCHITECTURES:
        candidates = _candidate_params(arch, layers)
        lengths = [c for c, _ in candidates]
        if declared_length is not None and declared_length in lengths:
            candidates = [(c, k) for c, k in candidates if c == declared_length]
        elif len(candidates) > 1 and arch != "2d-justo-unet-simple":
            candidates = [min(candidates)]
        for cin, classes in candidates:
            tmpl = template(arch, cin, classes)
            if tmpl is not None and _shapes_match(layers, tmpl):
                matches.append(Detection(arch, cin, classes))
    if len(matches) == 1:
        return matches[0]
    listing = "; ".join(
        f"{l.name}: {l.kind} " + ", ".join(
            f"{role}{tuple(arr.shape)}" for role, arr in l.weights.items()
        )
        for l in layers
    )
    if not matches:
        raise UnrecognizedArchitecture(
            f"checkpoint does not match any supported architecture. Detected layers: {listing}"
        )
    raise UnrecognizedArchitecture(
        f"checkpoint is ambiguous between {[m.architecture for m in matches]}. "
        f"Detected layers: {listing}"
    )
