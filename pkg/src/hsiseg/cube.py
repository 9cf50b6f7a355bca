"""Hyperspectral cube and label-map handling.

A cube is a dense (H, W, C) float32 array of radiance values, optionally
carrying one wavelength (nm) per channel.  Label maps are (H, W) uint8
arrays with class codes 0=sea, 1=land, 2=cloud.

Binary formats (little-endian):

* HSC1 cube file: magic ``HSC1``, u32 height, u32 width, u32 channels,
  u32 dtype code (1 = float32), then H*W*C float32 values row-major
  (H, W, C).  Optional trailing block: magic ``WLEN`` + C float32
  wavelengths.
* LBL1 label file: magic ``LBL1``, u32 height, u32 width, then H*W u8
  class codes.

All functions here are pure; nothing mutates its inputs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, TruncatedError

NUM_CLASSES = 3
CLASS_NAMES = ("sea", "land", "cloud")

_HSC_MAGIC = b"HSC1"
_WLEN_MAGIC = b"WLEN"
_LBL_MAGIC = b"LBL1"
_DTYPE_F32 = 1


@dataclass
class HsiCube:
    """A (H, W, C) float32 radiance cube with optional per-channel wavelengths."""

    values: np.ndarray
    wavelengths: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.wavelengths is not None:
            self.wavelengths = np.asarray(self.wavelengths, dtype=np.float32)
        self.validate()

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def validate(self) -> "HsiCube":
        if self.values.ndim != 3:
            raise ValueError(f"cube values must be (H, W, C), got shape {self.values.shape}")
        if min(self.values.shape) < 1:
            raise ValueError(f"cube dimensions must all be >= 1, got {self.values.shape}")
        if self.wavelengths is not None:
            if self.wavelengths.shape != (self.channels,):
                raise ValueError(
                    f"wavelengths length {self.wavelengths.shape} does not match "
                    f"{self.channels} channels"
                )
            if not np.all(np.diff(self.wavelengths) > 0):
                raise ValueError("wavelengths must be strictly increasing")
        return self


@dataclass(frozen=True)
class NormStats:
    """Per-channel min/max gathered from the training split."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def channels(self) -> int:
        return len(self.mins)


@dataclass(frozen=True)
class PadInfo:
    """Original vs padded spatial dims for one pad_to_multiple call."""

    height: int
    width: int
    padded_height: int
    padded_width: int
    patch_size: int


def load_cube(path: str | Path) -> HsiCube:
    """Read an HSC1 file; raises FormatError / TruncatedError on bad files."""
    raw = Path(path).read_bytes()
    if len(raw) < 20:
        raise FormatError(f"{path}: too short for an HSC1 header")
    magic, h, w, c, dtype = struct.unpack_from("<4s4I", raw, 0)
    if magic != _HSC_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_HSC_MAGIC!r}")
    if dtype != _DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if min(h, w, c) < 1:
        raise FormatError(f"{path}: zero-sized dimension in header ({h}x{w}x{c})")
    n = h * w * c
    body = raw[20:]
    if len(body) < n * 4:
        raise TruncatedError(f"{path}: expected {n} float32 values, payload holds {len(body) // 4}")
    values = np.frombuffer(body, dtype="<f4", count=n).reshape(h, w, c)
    wavelengths = None
    rest = body[n * 4:]
    if rest:
        if rest[:4] != _WLEN_MAGIC:
            raise FormatError(f"{path}: unexpected trailing block {rest[:4]!r}")
        if len(rest) < 4 + c * 4:
            raise TruncatedError(f"{path}: wavelength block truncated")
        wavelengths = np.frombuffer(rest, dtype="<f4", count=c, offset=4)
    return HsiCube(values.copy(), None if wavelengths is None else wavelengths.copy())


def save_cube(cube: HsiCube, path: str | Path) -> None:
    """Write an HSC1 file; load_cube(save_cube(x)) is bit-exact."""
    cube.validate()
    h, w, c = cube.values.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4s4I", _HSC_MAGIC, h, w, c, _DTYPE_F32))
        f.write(np.ascontiguousarray(cube.values, dtype="<f4").tobytes())
        if cube.wavelengths is not None:
            f.write(_WLEN_MAGIC)
            f.write(np.ascontiguousarray(cube.wavelengths, dtype="<f4").tobytes())


def load_labels(path: str | Path) -> np.ndarray:
    """Read an LBL1 file into a (H, W) uint8 label map."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: too short for an LBL1 header")
    magic, h, w = struct.unpack_from("<4s2I", raw, 0)
    if magic != _LBL_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_LBL_MAGIC!r}")
    if min(h, w) < 1:
        raise FormatError(f"{path}: zero-sized dimension in header ({h}x{w})")
    body = raw[12:]
    if len(body) < h * w:
        raise TruncatedError(f"{path}: expected {h * w} label bytes, got {len(body)}")
    labels = np.frombuffer(body, dtype=np.uint8, count=h * w).reshape(h, w)
    if labels.max(initial=0) >= NUM_CLASSES:
        raise FormatError(f"{path}: label codes must be < {NUM_CLASSES}")
    return labels.copy()


def save_labels(labels: np.ndarray, path: str | Path) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 2 or min(labels.shape) < 1:
        raise ValueError(f"label map must be 2-D and non-empty, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= NUM_CLASSES:
        raise ValueError(f"label codes must lie in [0, {NUM_CLASSES})")
    h, w = labels.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4s2I", _LBL_MAGIC, h, w))
        f.write(labels.astype(np.uint8).tobytes())


def minmax_fit(cubes: Sequence[HsiCube]) -> NormStats:
    """Global per-channel min/max over all supplied training cubes."""
    if len(cubes) == 0:
        raise ValueError("minmax_fit needs at least one cube")
    channels = cubes[0].channels
    for cb in cubes:
        if cb.channels != channels:
            raise ValueError(f"channel mismatch: {cb.channels} vs {channels}")
    mins = np.full(channels, np.inf, dtype=np.float64)
    maxs = np.full(channels, -np.inf, dtype=np.float64)
    for cb in cubes:
        mins = np.minimum(mins, cb.values.min(axis=(0, 1)))
        maxs = np.maximum(maxs, cb.values.max(axis=(0, 1)))
    return NormStats(mins.astype(np.float32), maxs.astype(np.float32))


def minmax_apply(cube: HsiCube, stats: NormStats) -> HsiCube:
    """Map each value to (x - min) / (max - min) per channel.

    Constant channels (max == min) map to 0.  Out-of-range inference values
    are deliberately not clipped, so the map stays affine.
    """
    if cube.channels != stats.channels:
        raise ValueError(f"channel mismatch: cube has {cube.channels}, stats {stats.channels}")
    span = stats.maxs.astype(np.float32) - stats.mins.astype(np.float32)
    safe = np.where(span > 0, span, 1.0)
    out = (cube.values - stats.mins) / safe
    out = np.where(span > 0, out, 0.0).astype(np.float32)
    return HsiCube(out, cube.wavelengths)


def _check_indices(indices: Sequence[int], channels: int) -> list[int]:
    idx = [int(i) for i in indices]
    for i in idx:
        if not 0 <= i < channels:
            raise ValueError(f"channel index {i} out of range for {channels} channels")
    if len(set(idx)) != len(idx):
        raise ValueError("channel indices must be unique")
    return idx


def drop_channels(cube: HsiCube, indices: Sequence[int]) -> HsiCube:
    """Remove the given channels, keeping the rest in order."""
    idx = _check_indices(indices, cube.channels)
    if len(idx) >= cube.channels:
        raise ValueError("cannot drop every channel")
    keep = [c for c in range(cube.channels) if c not in set(idx)]
    return select_channels(cube, keep)


def select_channels(cube: HsiCube, indices: Sequence[int]) -> HsiCube:
    """Keep only the given channels, in the order listed."""
    idx = _check_indices(indices, cube.channels)
    if len(idx) == 0:
        raise ValueError("keep-list must name at least one channel")
    values = cube.values[:, :, idx]
    wl = None if cube.wavelengths is None else cube.wavelengths[idx]
    return HsiCube(values, wl)


def pad_to_multiple(cube: HsiCube, patch_size: int) -> tuple[HsiCube, PadInfo]:
    """Round spatial dims up to multiples of patch_size by edge replication."""
    if patch_size < 1:
        raise ValueError(f"patch_size must be >= 1, got {patch_size}")
    h, w, _ = cube.values.shape
    ph = -(-h // patch_size) * patch_size
    pw = -(-w // patch_size) * patch_size
    values = np.pad(cube.values, ((0, ph - h), (0, pw - w), (0, 0)), mode="edge")
    info = PadInfo(h, w, ph, pw, patch_size)
    return HsiCube(values, cube.wavelengths), info


def extract_patches(cube: HsiCube, patch_size: int) -> np.ndarray:
    """Tile a padded cube into non-overlapping (N, P, P, C) patches, row-major."""
    h, w, c = cube.values.shape
    if h % patch_size or w % patch_size:
        raise ValueError(f"spatial dims {h}x{w} not divisible by patch size {patch_size}")
    th, tw = h // patch_size, w // patch_size
    tiles = cube.values.reshape(th, patch_size, tw, patch_size, c)
    return np.ascontiguousarray(tiles.transpose(0, 2, 1, 3, 4)).reshape(-1, patch_size, patch_size, c)


def stitch_labels(patch_preds: np.ndarray, pad: PadInfo) -> np.ndarray:
    """Reassemble per-patch label tiles and crop back to the original H x W."""
    patch_preds = np.asarray(patch_preds)
    p = pad.patch_size
    th, tw = pad.padded_height // p, pad.padded_width // p
    if patch_preds.shape != (th * tw, p, p):
        raise ValueError(
            f"expected {th * tw} tiles of {p}x{p}, got array of shape {patch_preds.shape}"
        )
    full = patch_preds.reshape(th, tw, p, p).transpose(0, 2, 1, 3).reshape(
        pad.padded_height, pad.padded_width
    )
    return np.ascontiguousarray(full[: pad.height, : pad.width])


def flatten_pixels(cube: HsiCube) -> np.ndarray:
    """Row-major (H*W, C) pixel table; pixel (r, c) sits at row r*W + c."""
    h, w, c = cube.values.shape
    return cube.values.reshape(h * w, c)


def unflatten_labels(flat: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of flatten_pixels for per-pixel predictions."""
    flat = np.asarray(flat)
    if flat.shape[0] != height * width:
        raise ValueError(f"{flat.shape[0]} entries cannot fill a {height}x{width} map")
    return flat.reshape(height, width)


def save_norm_stats(stats: NormStats, path: str | Path) -> None:
    """Persist NormStats as 'channel,min,max' CSV text."""
    lines = ["channel,min,max"]
    for i in range(stats.channels):
        lines.append(f"{i},{float(stats.mins[i])!r},{float(stats.maxs[i])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_norm_stats(path: str | Path) -> NormStats:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or rows[0] != "channel,min,max":
        raise FormatError(f"{path}: not a norm-stats file")
    mins, maxs = [], []
    for ln in rows[1:]:
        _, lo, hi = ln.split(",")
        mins.append(float(lo))
        maxs.append(float(hi))
    return NormStats(np.asarray(mins, dtype=np.float32), np.asarray(maxs, dtype=np.float32))
