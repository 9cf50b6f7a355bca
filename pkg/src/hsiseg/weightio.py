"""Bit-exact portable weight serialization (JWB1).

Layout, little-endian throughout:

* magic ``JWB1``, u32 version (= 1)
* u32 length + UTF-8 architecture id (e.g. ``1d-justo-liunet``)
* u32 input channels, u32 classes, u32 record count
* per record: u32 length + UTF-8 name, u32 rank, rank x u32 dims,
  then prod(dims) float32 values row-major.

Canonical tensor layouts: Conv1D kernels (Cout, Cin, K); Conv2D kernels
(Cout, Cin, K, K); Dense weights (Out, In); batch-norm vectors in order
gamma, beta, moving_mean, moving_variance.  Exporters from other
frameworks are responsible for transposing into these layouts.

Classical baseline models ride in the same container under the kind tags
``1d-ml-nb``, ``1d-ml-lda``, ``1d-ml-qda``, ``1d-ml-sgd``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import architectures, nn
from .baselines import (
    GaussianNBModel,
    LdaModel,
    QdaModel,
    SgdConfig,
    SgdLinearModel,
)
from .errors import FormatError, ShapeError, TruncatedError
from .nn import ModelSpec, WeightBundle

_MAGIC = b"JWB1"
VERSION = 1

BASELINE_KINDS = ("1d-ml-nb", "1d-ml-lda", "1d-ml-qda", "1d-ml-sgd")


@dataclass(frozen=True)
class WeightFileHeader:
    version: int
    architecture: str
    in_channels: int
    classes: int


def _write_str(f, s: str) -> None:
    data = s.encode("utf-8")
    f.write(struct.pack("<I", len(data)))
    f.write(data)


def save_weights(spec: ModelSpec, bundle: WeightBundle, path: str | Path,
                 architecture: str | None = None) -> None:
    """Serialize a model; the bundle must match the architecture's canonical shapes."""
    arch = architecture or _detect_architecture(spec)
    expected = _expected_records(arch, spec.in_channels, spec.classes)
    _check_records(expected, bundle, str(path))
    bundle.validate_finite()
    _write_container(path, arch, spec.in_channels, spec.classes, bundle.tensors)


def _write_container(path, arch: str, in_channels: int, classes: int,
                     tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", VERSION))
        _write_str(f, arch)
        f.write(struct.pack("<III", in_channels, classes, len(tensors)))
        for name, tensor in tensors.items():
            _write_str(f, name)
            f.write(struct.pack("<I", tensor.ndim))
            f.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, raw: bytes, path: str):
        self.raw = raw
        self.path = path
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise TruncatedError(f"{self.path}: file ends inside a record")
        out = self.raw[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_weights(path: str | Path) -> tuple[WeightFileHeader, WeightBundle]:
    """Read and validate a JWB1 file against the locally rebuilt architecture."""
    r = _Reader(Path(path).read_bytes(), str(path))
    if r.take(4) != _MAGIC:
        raise FormatError(f"{path}: bad magic, not a JWB1 file")
    version = r.u32()
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    arch = r.string()
    in_channels = r.u32()
    classes = r.u32()
    count = r.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.string()
        rank = r.u32()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        n = int(np.prod(dims)) if rank else 1
        tensors[name] = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(dims).copy()
    bundle = WeightBundle(tensors)
    expected = _expected_records(arch, in_channels, classes)
    _check_records(expected, bundle, str(path))
    return WeightFileHeader(version, arch, in_channels, classes), bundle


def _detect_architecture(spec: ModelSpec) -> str:
    for arch in architectures.Architecture:
        try:
            candidate = architectures.build(arch, spec.in_channels, spec.classes)
        except (ValueError, ShapeError):
            continue
        if candidate.layers == spec.layers:
            return arch.value
    raise ValueError("spec does not match a known architecture; pass `architecture=`")


def _expected_records(arch: str, in_channels: int, classes: int) -> dict[str, tuple[int, ...]]:
    if arch in BASELINE_KINDS:
        return _baseline_records(arch, in_channels, classes)
    spec = architectures.build(arch, in_channels, classes)
    expected: dict[str, tuple[int, ...]] = {}
    for _, _, shapes in nn.layer_param_shapes(spec):
        expected.update(shapes)
    return expected


def _baseline_records(kind: str, channels: int, classes: int) -> dict[str, tuple[int, ...]]:
    if kind == "1d-ml-nb":
        return {
            "priors": (classes,),
            "means": (classes, channels),
            "variances": (classes, channels),
        }
    if kind == "1d-ml-lda":
        return {
            "priors": (classes,),
            "means": (classes, channels),
            "covariance": (channels, channels),
        }
    if kind == "1d-ml-qda":
        return {
            "priors": (classes,),
            "means": (classes, channels),
            "covariances": (classes, channels, channels),
        }
    if kind == "1d-ml-sgd":
        return {
            "weight": (classes, channels),
            "bias": (classes,),
            "hyperparams": (3,),  # lr, epochs, seed
        }
    raise ValueError(f"unknown baseline kind {kind!r}")


def _check_records(expected: dict[str, tuple[int, ...]], bundle: WeightBundle, path: str) -> None:
    names = bundle.names()
    if names != list(expected):
        missing = [n for n in expected if n not in bundle.tensors]
        extra = [n for n in names if n not in expected]
        raise ShapeError(
            f"{path}: record names disagree with the architecture "
            f"(missing {missing}, unexpected {extra})"
        )
    for name, shape in expected.items():
        if tuple(bundle[name].shape) != shape:
            raise ShapeError(
                f"{path}: tensor {name} has shape {tuple(bundle[name].shape)}, "
                f"expected {shape}"
            )


# ---------------------------------------------------------------------------
# Baseline model adapters.
# ---------------------------------------------------------------------------


def save_baseline(model, channels: int, path: str | Path, classes: int = 3) -> None:
    """Serialize a classical baseline model under its kind tag."""
    if isinstance(model, GaussianNBModel):
        kind, tensors = "1d-ml-nb", {
            "priors": model.priors, "means": model.means, "variances": model.variances,
        }
    elif isinstance(model, LdaModel):
        kind, tensors = "1d-ml-lda", {
            "priors": model.priors, "means": model.means, "covariance": model.covariance,
        }
    elif isinstance(model, QdaModel):
        kind, tensors = "1d-ml-qda", {
            "priors": model.priors, "means": model.means, "covariances": model.covariances,
        }
    elif isinstance(model, SgdLinearModel):
        kind, tensors = "1d-ml-sgd", {
            "weight": model.weight, "bias": model.bias,
            "hyperparams": np.array(
                [model.config.lr, model.config.epochs, model.config.seed], dtype=np.float32
            ),
        }
    else:
        raise ValueError(f"not a baseline model: {type(model).__name__}")
    tensors = {k: np.asarray(v, dtype=np.float32) for k, v in tensors.items()}
    bundle = WeightBundle(tensors)
    _check_records(_baseline_records(kind, channels, classes), bundle, str(path))
    _write_container(path, kind, channels, classes, tensors)


def load_baseline(path: str | Path):
    """Inverse of save_baseline; returns the reconstructed model object."""
    header, bundle = load_weights(path)
    t = {k: v.astype(np.float64) for k, v in bundle.tensors.items()}
    if header.architecture == "1d-ml-nb":
        return GaussianNBModel(t["priors"], t["means"], t["variances"])
    if header.architecture == "1d-ml-lda":
        return LdaModel(t["priors"], t["means"], t["covariance"])
    if header.architecture == "1d-ml-qda":
        return QdaModel(t["priors"], t["means"], t["covariances"])
    if header.architecture == "1d-ml-sgd":
        lr, epochs, seed = bundle["hyperparams"]
        return SgdLinearModel(
            t["weight"], t["bias"], SgdConfig(float(lr), int(epochs), int(seed))
        )
    raise ValueError(f"{path} holds a CNN model, use load_weights")
