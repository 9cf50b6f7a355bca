"""Spectral band selection: channel statistics, anomaly flagging, PCA loadings.

The channel-reduction workflow is: compute per-channel standard deviations
over the training cubes, flag anomalous deviations with an isolation forest,
drop the flagged/known-bad channels, then (optionally) pick one
representative channel per spectral range by first-principal-component
loading magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cube import HsiCube
from .errors import DegenerateDataError

DEFAULT_TREES = 100
DEFAULT_SUBSAMPLE = 256
POWER_ITER_TOL = 1e-10
POWER_ITER_CAP = 10_000


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel population standard deviations and the sample count used."""

    stds: np.ndarray
    sample_count: int

    @property
    def channels(self) -> int:
        return len(self.stds)


def channel_std(cubes: Sequence[HsiCube]) -> ChannelStats:
    """Population standard deviation per channel over all pixels of all cubes."""
    if len(cubes) == 0:
        raise ValueError("channel_std needs at least one cube")
    channels = cubes[0].channels
    for cb in cubes:
        if cb.channels != channels:
            raise ValueError(f"channel mismatch: {cb.channels} vs {channels}")
    # Two-pass for accuracy: global mean first, then centered second moment.
    total = np.zeros(channels, dtype=np.float64)
    count = 0
    for cb in cubes:
        total += cb.values.sum(axis=(0, 1), dtype=np.float64)
        count += cb.height * cb.width
    mean = total / count
    sq = np.zeros(channels, dtype=np.float64)
    for cb in cubes:
        d = cb.values.astype(np.float64) - mean
        sq += np.einsum("hwc,hwc->c", d, d)
    return ChannelStats(np.sqrt(sq / count), count)


# ---------------------------------------------------------------------------
# Isolation forest on scalar values (channel deviations).
# ---------------------------------------------------------------------------


@dataclass
class _Node:
    threshold: float = 0.0
    size: int = 0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class IsolationForestModel:
    """A forest of random binary split trees over scalar values."""

    trees: list[_Node] = field(default_factory=list)
    subsample: int = 0
    contamination: float = 0.08


@lru_cache(maxsize=None)
def _harmonic(n: int) -> float:
    return sum(1.0 / k for k in range(1, n + 1))


def average_path_length(n: int) -> float:
    """c(n): expected unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * _harmonic(n - 1) - 2.0 * (n - 1) / n


def _grow(values: np.ndarray, depth: int, cap: int, rng: np.random.Generator) -> _Node:
    lo, hi = float(values.min()), float(values.max())
    if depth >= cap or len(values) <= 1 or lo == hi:
        return _Node(size=len(values))
    thr = rng.uniform(lo, hi)
    mask = values < thr
    if not mask.any() or mask.all():  # threshold landed on the boundary
        return _Node(size=len(values))
    node = _Node(threshold=thr)
    node.left = _grow(values[mask], depth + 1, cap, rng)
    node.right = _grow(values[~mask], depth + 1, cap, rng)
    return node


def iforest_fit(
    values: Sequence[float],
    trees: int = DEFAULT_TREES,
    subsample: int = DEFAULT_SUBSAMPLE,
    seed: int = 0,
) -> IsolationForestModel:
    """Build `trees` isolation trees on seeded subsamples of the values."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or len(vals) < 2:
        raise ValueError("iforest_fit needs a 1-D set of at least 2 values")
    psi = min(subsample, len(vals))
    cap = math.ceil(math.log2(psi)) if psi > 1 else 0
    rng = np.random.default_rng(seed)
    model = IsolationForestModel(subsample=psi)
    for _ in range(trees):
        sample = rng.choice(vals, size=psi, replace=False)
        model.trees.append(_grow(sample, 0, cap, rng))
    return model


def _path_length(node: _Node, x: float, depth: int) -> float:
    if node.is_leaf:
        return depth + average_path_length(node.size)
    child = node.left if x < node.threshold else node.right
    return _path_length(child, x, depth + 1)


def iforest_scores(model: IsolationForestModel, values: Sequence[float]) -> np.ndarray:
    """Anomaly score 2^(-E[h(x)] / c(n)) per value; higher = more anomalous."""
    if not model.trees:
        raise ValueError("model has no trees; fit it first")
    c = average_path_length(model.subsample)
    out = np.empty(len(values), dtype=np.float64)
    for i, x in enumerate(np.asarray(values, dtype=np.float64)):
        mean_h = sum(_path_length(t, x, 0) for t in model.trees) / len(model.trees)
        out[i] = 2.0 ** (-mean_h / c)
    return out


def iforest_flag(
    model: IsolationForestModel, values: Sequence[float], contamination: float
) -> list[int]:
    """Indices of the ceil(contamination * n) highest-scoring values, sorted."""
    if not 0.0 < contamination <= 0.5:
        raise ValueError(f"contamination must lie in (0, 0.5], got {contamination}")
    scores = iforest_scores(model, values)
    k = math.ceil(contamination * len(scores))
    order = np.lexsort((np.arange(len(scores)), -scores))
    return sorted(int(i) for i in order[:k])


def default_drop_list() -> list[int]:
    """The eight known-uninformative channels of the 120-channel instrument."""
    return [0, 1, 2, 3, 106, 107, 108, 109]


# ---------------------------------------------------------------------------
# First principal component via power iteration.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PcaLoadings:
    """Unit-norm first-component channel weights and its variance share."""

    loadings: np.ndarray
    explained_share: float


def pca_first_component(pixels: np.ndarray) -> PcaLoadings:
    """Dominant eigenvector of the channel covariance of a (N, C) pixel table.

    Power iteration on the explicit covariance matrix; the sign is fixed so
    the largest-magnitude loading is positive.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim != 2 or pixels.shape[0] < 2:
        raise ValueError("pca_first_component needs a (N>=2, C) pixel table")
    centered = pixels - pixels.mean(axis=0)
    cov = centered.T @ centered / pixels.shape[0]
    trace = float(np.trace(cov))
    if trace <= 0.0:
        raise DegenerateDataError("covariance is zero: all pixels identical")
    c = cov.shape[0]
    v = np.full(c, 1.0 / math.sqrt(c))
    for _ in range(POWER_ITER_CAP):
        nxt = cov @ v
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            raise DegenerateDataError("power iteration collapsed to the null space")
        nxt /= norm
        if min(np.linalg.norm(nxt - v), np.linalg.norm(nxt + v)) < POWER_ITER_TOL:
            v = nxt
            break
        v = nxt
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    eigval = float(v @ cov @ v)
    return PcaLoadings(v, eigval / trace)


@dataclass(frozen=True)
class SpectralRanges:
    """Half-open wavelength intervals (nm) for blue, green+red, and NIR."""

    blue: tuple[float, float] = (0.0, 500.0)
    green_red: tuple[float, float] = (500.0, 700.0)
    nir: tuple[float, float] = (700.0, math.inf)

    def as_ordered(self) -> list[tuple[str, tuple[float, float]]]:
        return [("blue", self.blue), ("green_red", self.green_red), ("nir", self.nir)]


def select_rgb_like(
    loadings: PcaLoadings,
    ranges: SpectralRanges,
    wavelengths: np.ndarray,
) -> list[int]:
    """One channel per spectral range, by maximal |loading|; ties to lower index.

    Returns indices ordered blue, green+red, NIR.
    """
    wavelengths = np.asarray(wavelengths, dtype=np.float64)
    if len(wavelengths) != len(loadings.loadings):
        raise ValueError("wavelengths and loadings disagree on channel count")
    picked = []
    for name, (lo, hi) in ranges.as_ordered():
        members = np.nonzero((wavelengths >= lo) & (wavelengths < hi))[0]
        if len(members) == 0:
            raise ValueError(f"spectral range {name} [{lo}, {hi}) contains no channel")
        best = members[np.argmax(np.abs(loadings.loadings[members]))]
        picked.append(int(best))
    return picked
