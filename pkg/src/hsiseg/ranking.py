"""Downlink prioritization from segmented maps.

Coverage fractions per class feed three priority queues (cloud ascending,
sea and land descending) plus per-class-segment data-management actions.

Decision table for `decide_actions` (one action per class segment):

====================  =========================  =================
segment               condition                  action
====================  =========================  =================
cloud                 cloud coverage > TH_cl     discard
cloud                 otherwise                  lossy-compress
sea                   sea coverage > TH_sea      downlink-priority
sea                   otherwise                  lossy-compress
land                  land coverage > TH_land    downlink-priority
land                  otherwise                  lossy-compress
====================  =========================  =================

The table is monotone in each coverage: raising a coverage can only move a
segment toward discard (cloud) or downlink-priority (sea/land), never back.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cube import NUM_CLASSES
from .metrics import spearman

CLOUD_ASC = "cloud-asc"
SEA_DESC = "sea-desc"
LAND_DESC = "land-desc"
CRITERIA = (CLOUD_ASC, SEA_DESC, LAND_DESC)

DOWNLINK_PRIORITY = "downlink-priority"
LOSSY_COMPRESS = "lossy-compress"
DISCARD = "discard"


@dataclass(frozen=True)
class CoverageReport:
    image_id: str
    sea: float
    land: float
    cloud: float

    def by_criterion(self, criterion: str) -> float:
        if criterion == CLOUD_ASC:
            return self.cloud
        if criterion == SEA_DESC:
            return self.sea
        if criterion == LAND_DESC:
            return self.land
        raise ValueError(f"unknown criterion {criterion!r}")


@dataclass(frozen=True)
class RankerConfig:
    th_cl: float
    th_sea: float
    th_land: float

    def __post_init__(self) -> None:
        for name, v in (("th_cl", self.th_cl), ("th_sea", self.th_sea), ("th_land", self.th_land)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class RankedQueue:
    criterion: str
    image_ids: tuple[str, ...]


def coverage(seg: np.ndarray, image_id: str = "") -> CoverageReport:
    """Class pixel counts divided by total for one segmented map."""
    seg = np.asarray(seg)
    if seg.size == 0:
        raise ValueError("cannot compute coverage of an empty map")
    counts = np.bincount(seg.reshape(-1).astype(np.int64), minlength=NUM_CLASSES)
    frac = counts / seg.size
    return CoverageReport(image_id, float(frac[0]), float(frac[1]), float(frac[2]))


def rank(reports: list[CoverageReport], criterion: str) -> RankedQueue:
    """Deterministic total order: coverage per criterion, ties by image id."""
    if len(reports) == 0:
        raise ValueError("rank needs at least one coverage report")
    ids = [r.image_id for r in reports]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate image ids")
    sign = 1.0 if criterion == CLOUD_ASC else -1.0
    ordered = sorted(reports, key=lambda r: (sign * r.by_criterion(criterion), r.image_id))
    return RankedQueue(criterion, tuple(r.image_id for r in ordered))


def spearman_vs_truth(pred: RankedQueue, truth: RankedQueue) -> float:
    """Rank correlation between two queues over the same image set."""
    if set(pred.image_ids) != set(truth.image_ids):
        raise ValueError("queues rank different image sets")
    pos_truth = {img: i for i, img in enumerate(truth.image_ids)}
    a = np.arange(len(pred.image_ids), dtype=np.float64)
    b = np.array([pos_truth[img] for img in pred.image_ids], dtype=np.float64)
    return spearman(a, b)


def decide_actions(report: CoverageReport, config: RankerConfig) -> dict[str, str]:
    """Per-class-segment action for one image; see the module decision table."""
    return {
        "cloud": DISCARD if report.cloud > config.th_cl else LOSSY_COMPRESS,
        "sea": DOWNLINK_PRIORITY if report.sea > config.th_sea else LOSSY_COMPRESS,
        "land": DOWNLINK_PRIORITY if report.land > config.th_land else LOSSY_COMPRESS,
    }


def load_ranker_config(path) -> RankerConfig:
    """Parse a key=value file with th_cl, th_sea, th_land."""
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        values[key.strip()] = float(val.strip())
    missing = {"th_cl", "th_sea", "th_land"} - set(values)
    if missing:
        raise ValueError(f"ranker config missing keys: {sorted(missing)}")
    return RankerConfig(values["th_cl"], values["th_sea"], values["th_land"])
