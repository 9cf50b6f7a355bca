"""Independent writers/readers for the engine's normative binary formats.

JWB1 (weights) and HSC1 (cubes) layouts are fixed little-endian contracts;
this module implements them from the published byte layout so the exporter
has no code dependency on the engine package.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

JWB_MAGIC = b"JWB1"
JWB_VERSION = 1
HSC_MAGIC = b"HSC1"
HSC_DTYPE_F32 = 1


def write_jwb(
    path: str | Path,
    architecture: str,
    in_channels: int,
    classes: int,
    records: list[tuple[str, np.ndarray]],
) -> None:
    with open(path, "wb") as f:
        f.write(JWB_MAGIC)
        f.write(struct.pack("<I", JWB_VERSION))
        arch = architecture.encode("utf-8")
        f.write(struct.pack("<I", len(arch)))
        f.write(arch)
        f.write(struct.pack("<III", in_channels, classes, len(records)))
        for name, tensor in records:
            data = name.encode("utf-8")
            f.write(struct.pack("<I", len(data)))
            f.write(data)
            f.write(struct.pack("<I", tensor.ndim))
            f.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def read_jwb(path: str | Path) -> tuple[str, int, int, list[tuple[str, np.ndarray]]]:
    raw = Path(path).read_bytes()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise ValueError(f"{path}: truncated JWB1 file")
        out = raw[pos : pos + n]
        pos += n
        return out

    def u32() -> int:
        return struct.unpack("<I", take(4))[0]

    if take(4) != JWB_MAGIC:
        raise ValueError(f"{path}: not a JWB1 file")
    if u32() != JWB_VERSION:
        raise ValueError(f"{path}: unsupported JWB1 version")
    arch = take(u32()).decode("utf-8")
    in_channels, classes, count = u32(), u32(), u32()
    records = []
    for _ in range(count):
        name = take(u32()).decode("utf-8")
        rank = u32()
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(dims)) if rank else 1
        records.append((name, np.frombuffer(take(4 * n), dtype="<f4").reshape(dims).copy()))
    return arch, in_channels, classes, records


def write_hsc(path: str | Path, values: np.ndarray) -> None:
    h, w, c = values.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4s4I", HSC_MAGIC, h, w, c, HSC_DTYPE_F32))
        f.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_hsc(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, h, w, c, dtype = struct.unpack_from("<4s4I", raw, 0)
    if magic != HSC_MAGIC or dtype != HSC_DTYPE_F32:
        raise ValueError(f"{path}: not a float32 HSC1 cube")
    values = np.frombuffer(raw, dtype="<f4", count=h * w * c, offset=20)
    return values.reshape(h, w, c).copy()
