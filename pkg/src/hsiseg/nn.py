"""Neural computation kernels and forward execution over a declarative layer graph.

Conventions, fixed across the engine:

* Convolutions use the cross-correlation orientation (no kernel flip), so
  checkpoints exported from mainstream frameworks load unchanged.
* 1D convolutions are valid-padded and 1D pooling floors odd lengths;
  2D convolutions are zero-padded "same" and 2D pooling requires even dims.
* Tensors are channel-last: (L, C) for sequences, (H, W, C) for images.
  Every kernel also accepts a leading batch axis.
* Weights live in a WeightBundle keyed by canonical names derived from the
  layer index, e.g. ``L00.conv1d.kernel``; batch-norm tensors are ordered
  gamma, beta, moving_mean, moving_variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError

CONV1D = "conv1d"
MAXPOOL1D = "maxpool1d"
CONV2D = "conv2d"
MAXPOOL2D = "maxpool2d"
UPSAMPLE2D = "upsample2d"
BATCHNORM = "batchnorm"
FLATTEN = "flatten"
DENSE = "dense"

RELU = "relu"
TANH = "tanh"
SOFTMAX = "softmax"
NONE = "none"

BN_EPS = 1e-3
POOL_FACTOR = 2  # pooling and upsampling factors are fixed at 2

_KINDS = {CONV1D, MAXPOOL1D, CONV2D, MAXPOOL2D, UPSAMPLE2D, BATCHNORM, FLATTEN, DENSE}
_ACTIVATIONS = {RELU, TANH, SOFTMAX, NONE}


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a model: kind, width/kernel where applicable, activation."""

    kind: str
    units: int = 0        # conv kernel count / dense output units
    kernel: int = 0       # kernel length (1D) or side (square 2D)
    activation: str = NONE
    padding: str = "valid"

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.kind in (CONV1D, CONV2D, DENSE) and self.units < 1:
            raise ValueError(f"{self.kind} needs units >= 1")
        if self.kind in (CONV1D, CONV2D) and self.kernel < 1:
            raise ValueError(f"{self.kind} needs kernel >= 1")


@dataclass(frozen=True)
class ModelSpec:
    """An ordered layer list plus the input channel count and class count."""

    layers: tuple[LayerSpec, ...]
    in_channels: int
    classes: int

    @property
    def is_2d(self) -> bool:
        return any(l.kind in (CONV2D, MAXPOOL2D, UPSAMPLE2D) for l in self.layers)


@dataclass
class WeightBundle:
    """Ordered named tensors, one group per parameterized layer."""

    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        self.tensors[name] = value

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def names(self) -> list[str]:
        return list(self.tensors)

    def trainable_names(self) -> list[str]:
        return [n for n in self.tensors if not n.endswith(("moving_mean", "moving_variance"))]

    def copy(self) -> "WeightBundle":
        return WeightBundle({k: v.copy() for k, v in self.tensors.items()})

    def validate_finite(self) -> None:
        for name, t in self.tensors.items():
            if not np.all(np.isfinite(t)):
                raise ValueError(f"tensor {name} contains non-finite values")


# ---------------------------------------------------------------------------
# Kernels.  Each accepts the documented shape or the same with a leading
# batch axis; the unbatched form is returned unbatched.
# ---------------------------------------------------------------------------


def _batched(x: np.ndarray, core_ndim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    if x.ndim == core_ndim:
        return x[None], False
    if x.ndim == core_ndim + 1:
        return x, True
    raise ShapeError(f"expected {core_ndim}- or {core_ndim + 1}-D input, got shape {x.shape}")


def conv1d_valid(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """(L, Cin) * (Cout, Cin, K) -> (L-K+1, Cout), cross-correlation."""
    x, batched = _batched(x, 2)
    cout, cin, k = kernel.shape
    if x.shape[2] != cin:
        raise ShapeError(f"input has {x.shape[2]} channels, kernel expects {cin}")
    if x.shape[1] < k:
        raise ShapeError(f"sequence length {x.shape[1]} shorter than kernel {k}")
    win = sliding_window_view(x, k, axis=1)              # (N, L-K+1, Cin, K)
    out = np.einsum("nlck,ock->nlo", win, kernel, optimize=True) + bias
    out = out.astype(x.dtype, copy=False)
    return out if batched else out[0]


def maxpool1d(x: np.ndarray) -> np.ndarray:
    """(L, C) -> (floor(L/2), C); a trailing odd element is discarded."""
    x, batched = _batched(x, 2)
    n, length, c = x.shape
    if length < 2:
        raise ShapeError(f"cannot pool a length-{length} sequence")
    half = length // 2
    out = x[:, : 2 * half].reshape(n, half, 2, c).max(axis=2)
    return out if batched else out[0]


def conv2d_same(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """(H, W, Cin) * (Cout, Cin, K, K) -> (H, W, Cout), zero-padded same."""
    x, batched = _batched(x, 3)
    cout, cin, k, k2 = kernel.shape
    if k != k2 or k % 2 == 0:
        raise ShapeError(f"2D kernels must be square with odd side, got {k}x{k2}")
    if x.shape[3] != cin:
        raise ShapeError(f"input has {x.shape[3]} channels, kernel expects {cin}")
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))   # (N, H, W, Cin, K, K)
    out = np.einsum("nhwcij,ocij->nhwo", win, kernel, optimize=True) + bias
    out = out.astype(x.dtype, copy=False)
    return out if batched else out[0]


def maxpool2d(x: np.ndarray) -> np.ndarray:
    """(H, W, C) -> (H/2, W/2, C) by non-overlapping 2x2 max; dims must be even."""
    x, batched = _batched(x, 3)
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"2D pooling needs even spatial dims, got {h}x{w}")
    out = x.reshape(n, h // 2, 2, w // 2, 2, c).max(axis=(2, 4))
    return out if batched else out[0]


def upsample2d(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor 2x replication: (H, W, C) -> (2H, 2W, C)."""
    x, batched = _batched(x, 3)
    out = np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)
    return out if batched else out[0]


def batchnorm_infer(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    eps: float = BN_EPS,
) -> np.ndarray:
    """gamma * (x - mean) / sqrt(var + eps) + beta, per trailing channel."""
    x = np.asarray(x)
    if x.shape[-1] != len(gamma):
        raise ShapeError(f"input has {x.shape[-1]} channels, batchnorm expects {len(gamma)}")
    if np.any(var < 0):
        raise ValueError("batchnorm variance must be non-negative")
    scale = gamma / np.sqrt(var + eps)
    return ((x - mean) * scale + beta).astype(x.dtype, copy=False)


def dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """(In,) * (Out, In) -> (Out,); accumulates in float64."""
    x, batched = _batched(x, 1)
    if x.shape[1] != weight.shape[1]:
        raise ShapeError(f"input width {x.shape[1]} does not match weight {weight.shape}")
    out = (x.astype(np.float64) @ weight.T.astype(np.float64) + bias).astype(x.dtype)
    return out if batched else out[0]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtracted stable softmax along `axis`."""
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def apply_activation(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == RELU:
        return relu(x)
    if activation == TANH:
        return np.tanh(x)
    if activation == SOFTMAX:
        return softmax(x, axis=-1)
    return x


# ---------------------------------------------------------------------------
# Canonical weight naming, shape propagation, execution.
# ---------------------------------------------------------------------------


def layer_param_shapes(
    spec: ModelSpec,
) -> list[tuple[int, LayerSpec, dict[str, tuple[int, ...]]]]:
    """Per parameterized layer: (index, spec, name -> shape).

    Shapes depend on the input channel count, so they are resolved by
    propagating shapes from the model input.
    """
    out = []
    shape = _input_shape(spec)
    for i, layer in enumerate(spec.layers):
        prefix = f"L{i:02d}.{layer.kind}"
        if layer.kind == CONV1D:
            cin = shape[-1]
            out.append((i, layer, {
                f"{prefix}.kernel": (layer.units, cin, layer.kernel),
                f"{prefix}.bias": (layer.units,),
            }))
        elif layer.kind == CONV2D:
            cin = shape[-1]
            out.append((i, layer, {
                f"{prefix}.kernel": (layer.units, cin, layer.kernel, layer.kernel),
                f"{prefix}.bias": (layer.units,),
            }))
        elif layer.kind == DENSE:
            out.append((i, layer, {
                f"{prefix}.weight": (layer.units, shape[-1]),
                f"{prefix}.bias": (layer.units,),
            }))
        elif layer.kind == BATCHNORM:
            c = shape[-1]
            out.append((i, layer, {
                f"{prefix}.gamma": (c,),
                f"{prefix}.beta": (c,),
                f"{prefix}.moving_mean": (c,),
                f"{prefix}.moving_variance": (c,),
            }))
        shape = _propagate(layer, shape, i)
    return out


def _input_shape(spec: ModelSpec) -> tuple[int, ...]:
    if spec.is_2d:
        # Spatial dims are unknown until run time; validate on the 48x48 patch.
        return (48, 48, spec.in_channels)
    return (spec.in_channels, 1)


def _propagate(layer: LayerSpec, shape: tuple[int, ...], index: int) -> tuple[int, ...]:
    kind = layer.kind
    where = f"layer {index} ({kind})"
    if kind == CONV1D:
        length, _ = shape
        if length < layer.kernel:
            raise ShapeError(
                f"{where}: sequence length {length} shorter than kernel {layer.kernel}; "
                f"features vanish"
            )
        return (length - layer.kernel + 1, layer.units)
    if kind == MAXPOOL1D:
        length, c = shape
        if length < 2:
            raise ShapeError(f"{where}: cannot pool a length-{length} sequence")
        return (length // 2, c)
    if kind == CONV2D:
        h, w, _ = shape
        if layer.kernel % 2 == 0:
            raise ShapeError(f"{where}: same-padded conv needs an odd kernel")
        return (h, w, layer.units)
    if kind == MAXPOOL2D:
        h, w, c = shape
        if h % 2 or w % 2:
            raise ShapeError(f"{where}: pooling needs even spatial dims, got {h}x{w}")
        return (h // 2, w // 2, c)
    if kind == UPSAMPLE2D:
        h, w, c = shape
        return (2 * h, 2 * w, c)
    if kind == BATCHNORM:
        return shape
    if kind == FLATTEN:
        return (int(np.prod(shape)),)
    if kind == DENSE:
        if len(shape) != 1:
            raise ShapeError(f"{where}: dense needs a flat input, got shape {shape}")
        return (layer.units,)
    raise ShapeError(f"{where}: unhandled kind")


def output_shape(spec: ModelSpec, input_shape: tuple[int, ...]) -> tuple[int, ...]:
    """Propagate shapes layer by layer; raises ShapeError naming the layer."""
    shape = tuple(int(s) for s in input_shape)
    for i, layer in enumerate(spec.layers):
        shape = _propagate(layer, shape, i)
    return shape


def validate_spec(spec: ModelSpec) -> None:
    """Check the layer graph is shape-consistent and ends in `classes` softmax."""
    final = output_shape(spec, _input_shape(spec))
    if final[-1] != spec.classes:
        raise ShapeError(
            f"model produces {final[-1]} outputs but declares {spec.classes} classes"
        )
    last_act = next(
        (l.activation for l in reversed(spec.layers) if l.activation != NONE), NONE
    )
    if last_act != SOFTMAX:
        raise ShapeError("final activation must be softmax")


def param_count(spec: ModelSpec) -> int:
    """Total parameters; batch norm counts 4 per channel (moving stats included)."""
    return sum(
        int(np.prod(s))
        for _, _, shapes in layer_param_shapes(spec)
        for s in shapes.values()
    )


def forward(spec: ModelSpec, weights: WeightBundle, x: np.ndarray) -> np.ndarray:
    """Run the model in inference mode (batch norm uses moving statistics).

    1D models accept (L,), (L, 1), (N, L) or (N, L, 1) and produce (classes,)
    per example; 2D models accept (H, W, C) or (N, H, W, C) and produce
    per-pixel class probabilities.  Outputs sum to 1 over the class axis.
    """
    a, batched = _canonical_input(spec, x)
    output_shape(spec, a.shape[1:])  # raises with the offending layer named
    for i, layer in enumerate(spec.layers):
        a = _run_layer(spec, weights, i, layer, a)
    return a if batched else a[0]


def _canonical_input(spec: ModelSpec, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    if spec.is_2d:
        return _batched(x, 3)
    if x.ndim == 1:
        return x[None, :, None], False
    if x.ndim == 2:
        if x.shape == (spec.in_channels, 1):
            return x[None], False            # a single (L, 1) sequence
        return x[:, :, None], True           # a batch of flat spectra
    if x.ndim == 3:
        return x, True
    raise ShapeError(f"cannot interpret input of shape {x.shape} for a 1D model")


def _run_layer(
    spec: ModelSpec, weights: WeightBundle, i: int, layer: LayerSpec, a: np.ndarray
) -> np.ndarray:
    prefix = f"L{i:02d}.{layer.kind}"
    kind = layer.kind
    if kind == CONV1D:
        a = conv1d_valid(a, weights[f"{prefix}.kernel"], weights[f"{prefix}.bias"])
    elif kind == MAXPOOL1D:
        a = maxpool1d(a)
    elif kind == CONV2D:
        a = conv2d_same(a, weights[f"{prefix}.kernel"], weights[f"{prefix}.bias"])
    elif kind == MAXPOOL2D:
        a = maxpool2d(a)
    elif kind == UPSAMPLE2D:
        a = upsample2d(a)
    elif kind == BATCHNORM:
        a = batchnorm_infer(
            a,
            weights[f"{prefix}.gamma"],
            weights[f"{prefix}.beta"],
            weights[f"{prefix}.moving_mean"],
            weights[f"{prefix}.moving_variance"],
        )
    elif kind == FLATTEN:
        a = a.reshape(a.shape[0], -1)
    elif kind == DENSE:
        a = dense(a, weights[f"{prefix}.weight"], weights[f"{prefix}.bias"])
    return apply_activation(a, layer.activation)
