"""Dual-engine verification: source framework vs the flight engine.

Runs the Keras checkpoint and the exported JWB1 model over the same HSC1
cube of random inputs and compares per-pixel class probabilities.  The
flight engine is driven exclusively through its command line
(``hsiseg infer --probs-out``), so the comparison crosses the real
interface boundary.

For 2D models the cube's spatial dims must be multiples of the 48-pixel
patch so that both engines see identical tiles without padding.
"""

from __future__ import annotations

import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detect import Detection
from .formats import read_hsc

PATCH = 48


@dataclass(frozen=True)
class CrossCheckResult:
    max_abs_diff: float
    inputs: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff < self.tolerance


def keras_probabilities(checkpoint: str, detection: Detection, cube: np.ndarray) -> np.ndarray:
    """Source-framework per-pixel probabilities for an (H, W, C) cube."""
    import keras  # deferred: only the verify path needs the framework

    model = keras.models.load_model(checkpoint, compile=False)
    h, w, c = cube.shape
    if detection.architecture == "2d-justo-unet-simple":
        if h % PATCH or w % PATCH:
            raise ValueError(
                f"verification cube dims must be multiples of {PATCH}, got {h}x{w}"
            )
        tiles = (
            cube.reshape(h // PATCH, PATCH, w // PATCH, PATCH, c)
            .transpose(0, 2, 1, 3, 4)
            .reshape(-1, PATCH, PATCH, c)
        )
        probs = model.predict(tiles, verbose=0)
        return (
            probs.reshape(h // PATCH, w // PATCH, PATCH, PATCH, -1)
            .transpose(0, 2, 1, 3, 4)
            .reshape(h, w, -1)
        )
    pixels = cube.reshape(-1, c)[:, :, None]
    probs = model.predict(pixels, verbose=0)
    return probs.reshape(h, w, -1)


def engine_probabilities(weights: str | Path, cube_path: str | Path) -> np.ndarray:
    """Flight-engine per-pixel probabilities via the hsiseg command line."""
    if shutil.which("hsiseg") is None:
        raise RuntimeError("the hsiseg command is not on PATH; install the engine package")
    with tempfile.TemporaryDirectory(prefix="jwbexport-") as tmp:
        labels = Path(tmp) / "pred.lbl"
        probs = Path(tmp) / "probs.hsc"
        proc = subprocess.run(
            ["hsiseg", "infer", "--weights", str(weights), "--cube", str(cube_path),
             "--out", str(labels), "--probs-out", str(probs)],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise RuntimeError(f"engine inference failed: {proc.stderr.strip()}")
        return read_hsc(probs)


def cross_check(
    checkpoint: str,
    weights: str | Path,
    cube_path: str | Path,
    detection: Detection,
    tolerance: float = 1e-4,
) -> CrossCheckResult:
    cube = read_hsc(cube_path)
    if cube.shape[2] != detection.in_channels:
        raise ValueError(
            f"verification cube has {cube.shape[2]} channels, model expects "
            f"{detection.in_channels}"
        )
    reference = keras_probabilities(checkpoint, detection, cube)
    ours = engine_probabilities(weights, cube_path)
    if reference.shape != ours.shape:
        raise RuntimeError(
            f"engines disagree on output shape: {reference.shape} vs {ours.shape}"
        )
    diff = float(np.max(np.abs(reference.astype(np.float64) - ours.astype(np.float64))))
    return CrossCheckResult(diff, cube.shape[0] * cube.shape[1], tolerance)
