"""Evaluation metrics and the downlink ranking application.

Shows the per-class one-vs-rest rates, the trade-off distance from the
ideal (0, 0) false-alarm point, and the three coverage priority queues
with threshold-driven data-management actions.
"""

import numpy as np

from hsiseg.metrics import metrics_report
from hsiseg.ranking import (
    CRITERIA,
    CoverageReport,
    RankerConfig,
    coverage,
    decide_actions,
    rank,
    spearman_vs_truth,
)

rng = np.random.default_rng(7)

truth = rng.integers(0, 3, size=(64, 64))
pred = truth.copy()
noise = rng.random(truth.shape) < 0.06          # 6% label noise
pred[noise] = rng.integers(0, 3, size=noise.sum())

report = metrics_report(pred, truth)
print(f"average accuracy {report.average_accuracy:.3f}, overall {report.overall_accuracy:.3f}")
for name, rates, dist in zip(("sea", "land", "cloud"), report.rates_per_class,
                             report.distance_per_class):
    print(f"  {name:6s} FPR {rates.fpr:.3f}  FNR {rates.fnr:.3f}  distance-to-ideal {dist:.3f}")

# coverage queues over a handful of segmented scenes
maps = {}
for name, cloud_frac in (("alpha", 0.8), ("bravo", 0.1), ("charlie", 0.4), ("delta", 0.25)):
    m = rng.integers(0, 2, size=(40, 40))       # sea/land mix
    m[: int(40 * cloud_frac)] = 2
    maps[name] = m

reports = [coverage(m, name) for name, m in maps.items()]
for criterion in CRITERIA:
    queue = rank(reports, criterion)
    print(f"{criterion:10s} queue: {' > '.join(queue.image_ids)}")

truth_queue = rank(reports, "cloud-asc")
noisy = [CoverageReport(r.image_id, r.sea, r.land, r.cloud + rng.normal(0, 0.02)) for r in reports]
pred_queue = rank(noisy, "cloud-asc")
print(f"spearman vs truth after coverage noise: {spearman_vs_truth(pred_queue, truth_queue):.2f}")

config = RankerConfig(th_cl=0.5, th_sea=0.4, th_land=0.4)
for r in reports:
    actions = decide_actions(r, config)
    print(f"{r.image_id:8s} cloud={r.cloud:.2f} -> {actions}")
