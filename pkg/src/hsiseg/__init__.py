"""On-board hyperspectral sea-land-cloud segmentation engine.

Submodules:

* ``cube`` — HSC1/LBL1 I/O, normalization, channel ops, padding/patching
* ``bands`` — channel statistics, isolation-forest flagging, PCA band picking
* ``nn`` — neural kernels, forward execution, parameter counting
* ``architectures`` — the seven supported model builders
* ``training`` — backpropagation, Adam, gradient checking
* ``baselines`` — SGD / NB / LDA / QDA pixel classifiers
* ``metrics`` — confusion-derived statistics, Spearman, coverage MAE
* ``ranking`` — coverage queues and data-management actions
* ``weightio`` — the JWB1 portable weight container
* ``cli`` — the ``hsiseg`` command
"""

from .architectures import Architecture, build, init_weights, parse_architecture
from .cube import (
    HsiCube,
    NormStats,
    PadInfo,
    drop_channels,
    extract_patches,
    flatten_pixels,
    load_cube,
    load_labels,
    minmax_apply,
    minmax_fit,
    pad_to_multiple,
    save_cube,
    save_labels,
    select_channels,
    stitch_labels,
    unflatten_labels,
)
from .nn import LayerSpec, ModelSpec, WeightBundle, forward, output_shape, param_count
from .training import TrainConfig, TrainHistory, backward, fit, grad_check
from .weightio import load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "HsiCube",
    "LayerSpec",
    "ModelSpec",
    "NormStats",
    "PadInfo",
    "TrainConfig",
    "TrainHistory",
    "WeightBundle",
    "backward",
    "build",
    "drop_channels",
    "extract_patches",
    "fit",
    "flatten_pixels",
    "forward",
    "grad_check",
    "init_weights",
    "load_cube",
    "load_labels",
    "load_weights",
    "minmax_apply",
    "minmax_fit",
    "output_shape",
    "pad_to_multiple",
    "param_count",
    "parse_architecture",
    "save_cube",
    "save_labels",
    "save_weights",
    "select_channels",
    "stitch_labels",
    "unflatten_labels",
]
