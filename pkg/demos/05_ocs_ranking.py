"""Ratios, OCS and ranking for the bundled reference tables.

    python3 demos/05_ocs_ranking.py
"""

from compressmetrics.combined import RatioBindings, compute_ratios, ocs, rank_by_ocs, resolve_zeta
from compressmetrics.reference import reference_reports

baseline, candidates = reference_reports("resnet18_imagenet")
ptq = next(c for c in candidates if c.name == "PTQ (INT8)")
r = compute_ratios(baseline, ptq)
print(f"PTQ vs FP32: P={r.P:.5f} S={r.S:.3f} C={r.C:.4f} E={r.E:.3f} -> OCS {ocs(r).value:.6f}")
print(f"same with a Turing-class hardware constant: OCS {ocs(r.with_zeta(resolve_zeta(None, 'turing'))).value:.4f}")

print("\nranking on CHATS / disk / energy:")
for i, (name, score) in enumerate(rank_by_ocs(baseline, candidates).entries, 1):
    print(f"  {i}. {name:<14} {score.value:9.4f}")

print("\nranking on measured latency / RAM instead:")
alt = RatioBindings(speed="latency", size="ram")
for i, (name, score) in enumerate(rank_by_ocs(baseline, candidates, alt).entries, 1):
    print(f"  {i}. {name:<14} {score.value:9.4f}")

base, cands = reference_reports("yolov5s_coco")
print(f"\nYOLOv5s (mAP): {rank_by_ocs(base, cands, RatioBindings(performance='map')).names()}")
