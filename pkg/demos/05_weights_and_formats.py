"""The portable binary formats: HSC1 cubes, LBL1 maps, JWB1 weights.

Everything is little-endian and bit-exact on roundtrip, so models trained
anywhere can run on the flight engine unchanged.
"""

import tempfile
import time
from pathlib import Path

import numpy as np

from hsiseg import nn
from hsiseg.architectures import build, init_weights
from hsiseg.cli import infer_cube
from hsiseg.cube import HsiCube, load_cube, save_cube
from hsiseg.weightio import load_weights, save_weights

workdir = Path(tempfile.mkdtemp(prefix="hsiseg-demo-"))

spec = build("1d-justo-liunet", 112, 3)
weights = init_weights(spec, seed=0)
wpath = workdir / "liunet.jwb"
save_weights(spec, weights, wpath)
header, back = load_weights(wpath)
identical = all(np.array_equal(back[n], weights[n]) for n in weights.names())
print(f"saved {wpath.name}: arch={header.architecture} "
      f"channels={header.in_channels} classes={header.classes}")
print(f"roundtrip bit-exact: {identical}")
print(f"float payload = {sum(back[n].size for n in back.names()):,} values "
      f"(= published parameter count {nn.param_count(spec):,})")

cube = HsiCube(np.random.default_rng(1).uniform(0, 1, size=(64, 64, 112)).astype(np.float32))
cpath = workdir / "scene.hsc"
save_cube(cube, cpath)
print(f"cube file size: {cpath.stat().st_size:,} bytes (20-byte header + payload)")

cube = load_cube(cpath)
t0 = time.perf_counter()
labels, _ = infer_cube(spec, weights, cube)
ms = (time.perf_counter() - t0) * 1e3
print(f"segmented {cube.height}x{cube.width} pixels in {ms:.0f} ms "
      f"({labels.size / ms:.0f} pixels/ms)")
