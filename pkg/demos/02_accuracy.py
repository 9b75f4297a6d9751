"""Top-k accuracy on a classification log and mAP on a small detection log.

    python3 demos/02_accuracy.py
"""

from pathlib import Path

from compressmetrics.accuracy import (
    COCO_IOU,
    average_precision,
    mean_average_precision,
    pr_curve,
    read_classification_log,
    read_detection_log,
    top_k_accuracy,
)

BUNDLE = Path(__file__).resolve().parents[1] / "tests" / "data" / "bundle"

log = read_classification_log(BUNDLE / "predictions.jsonl", BUNDLE / "ground_truth.jsonl")
for k in (1, 2, 5):
    print(f"top-{k} accuracy over {len(log)} samples: {top_k_accuracy(log, k):.3f}")

dets = read_detection_log(BUNDLE / "detections.jsonl")
gts = read_detection_log(BUNDLE / "detections_gt.jsonl", with_confidence=False)
curve = pr_curve(dets, gts, class_id=0, iou_threshold=0.5)
print("class 0 (recall, precision) points:", [(round(r, 3), round(p, 3)) for r, p in curve.points])
print(f"class 0 AP@0.5: {average_precision(dets, gts, 0, 0.5):.4f}")
single = mean_average_precision(dets, gts)
coco = mean_average_precision(dets, gts, COCO_IOU)
print(f"mAP@0.5 = {single.map:.4f}  per class {single.per_class}")
print(f"mAP@[.5:.95] = {coco.map:.4f}")
if single.excluded_classes:
    print("classes predicted but absent from ground truth (excluded):", single.excluded_classes)
