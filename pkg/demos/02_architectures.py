"""The seven supported architectures: parameter counts and shape behavior."""

import numpy as np

from hsiseg import nn
from hsiseg.architectures import Architecture, build, init_weights
from hsiseg.errors import ShapeError

print(f"{'architecture':24s} {'params @112ch':>14s}")
for arch in Architecture:
    spec = build(arch, 112, 3)
    print(f"{arch.value:24s} {nn.param_count(spec):>14,}")

print()
spec3 = build("2d-justo-unet-simple", 3, 3)
print(f"2d-justo-unet-simple retrained on 3 channels: {nn.param_count(spec3):,} params")

try:
    build("1d-justo-liunet", 3, 3)
except ShapeError as exc:
    print(f"1d-justo-liunet on 3 channels is infeasible: {exc}")

# the valid/floor length chain that pins the 4,563 total
spec = build("1d-justo-liunet", 112, 3)
shape = (112, 1)
chain = [shape[0]]
for i, layer in enumerate(spec.layers):
    shape = nn.output_shape(nn.ModelSpec(spec.layers[: i + 1], 112, 3), (112, 1))
    if len(shape) == 2:
        chain.append(shape[0])
print(f"1d-justo-liunet sequence lengths: {' -> '.join(map(str, chain))}")

weights = init_weights(spec, seed=0)
probs = nn.forward(spec, weights, np.random.default_rng(0).normal(size=112).astype(np.float32))
print(f"forward on one spectrum -> {probs.round(3)} (sums to {probs.sum():.6f})")
