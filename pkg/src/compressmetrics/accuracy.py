"""Classification and detection accuracy.

Top-k accuracy for classification logs; IoU matching, precision/recall/F1,
AP and mAP for detection logs. AP is accumulated with exact rational
arithmetic so results do not depend on the order floating point sums are
formed in.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

BBox = tuple[float, float, float, float]

SINGLE_IOU = (0.5,)
COCO_IOU = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
IOU_PROFILES = {"single": SINGLE_IOU, "coco": COCO_IOU}
AP_METHODS = ("all_point", "11_point")


class AccuracyError(ValueError):
    pass


class LogFormatError(AccuracyError):
    """A prediction or ground-truth log could not be parsed."""


class NoGroundTruthError(AccuracyError):
    """AP is undefined for a class without ground-truth boxes."""

    def __init__(self, class_id: int):
        self.class_id = class_id
        super().__init__(f"class {class_id} has no ground-truth boxes; AP undefined")


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationRecord:
    """One classified sample.

    Either ``scores`` (class id -> score) or ``ranked`` (class ids, best first)
    must be given.
    """

    sample_id: str
    true_label: int
    scores: Optional[Mapping[int, float]] = None
    ranked: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.ranked is not None:
            if len(set(self.ranked)) != len(self.ranked):
                raise AccuracyError(f"sample {self.sample_id!r}: duplicate class ids in ranking")
        elif self.scores is None:
            raise AccuracyError(f"sample {self.sample_id!r}: needs scores or a ranking")

    def ranking(self) -> tuple[int, ...]:
        if self.ranked is not None:
            return tuple(self.ranked)
        # ties broken by ascending class id
        return tuple(c for c, _ in sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0])))


def top_k_accuracy(log: Sequence[ClassificationRecord], k: int) -> float:
    """Fraction of samples whose true label is among the k best-ranked classes."""
    if k < 1:
        raise AccuracyError("k must be >= 1")
    if not log:
        raise AccuracyError("empty classification log")
    seen: set[str] = set()
    hits = 0
    for rec in log:
        if rec.sample_id in seen:
            raise AccuracyError(f"duplicate sample id {rec.sample_id!r}")
        seen.add(rec.sample_id)
        ranking = rec.ranking()
        if not ranking:
            raise AccuracyError(f"sample {rec.sample_id!r} has no scored classes")
        if k > len(ranking):
            raise AccuracyError(f"k={k} exceeds the {len(ranking)} classes scored for sample {rec.sample_id!r}")
        hits += rec.true_label in ranking[:k]
    return hits / len(log)


# --------------------------------------------------------------------------
# detection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    bbox: BBox
    class_id: int
    confidence: float = 1.0

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise AccuracyError(f"degenerate box {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise AccuracyError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    boxes: tuple[Box, ...]


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass(frozen=True)
class FlaggedDetection:
    image_id: str
    box_index: int
    class_id: int
    confidence: float
    is_tp: bool
    matched_gt: Optional[int] = None


@dataclass(frozen=True)
class MatchResult:
    counts: dict[int, MatchCounts]
    detections: tuple[FlaggedDetection, ...]

    def total(self) -> MatchCounts:
        return MatchCounts(
            tp=sum(c.tp for c in self.counts.values()),
            fp=sum(c.fp for c in self.counts.values()),
            fn=sum(c.fn for c in self.counts.values()),
        )


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two corner-format boxes."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def _index_records(records: Iterable[DetectionRecord], what: str) -> dict[str, DetectionRecord]:
    out: dict[str, DetectionRecord] = {}
    for rec in records:
        if rec.image_id in out:
            raise AccuracyError(f"duplicate image id {rec.image_id!r} in {what}")
        out[rec.image_id] = rec
    return out


def _check_threshold(t: float) -> None:
    if not 0.0 < t <= 1.0:
        raise AccuracyError(f"IoU threshold {t} outside (0, 1]")


def match_detections(
    dets: Iterable[DetectionRecord],
    gts: Iterable[DetectionRecord],
    iou_threshold: float = 0.5,
    class_id: Optional[int] = None,
) -> MatchResult:
    """Greedy class-wise matching of detections to ground truth.

    Detections are visited by descending confidence (ties: image id, then box
    index). Each claims the unmatched same-class ground truth with the highest
    IoU at or above ``iou_threshold``. Restrict to one class with ``class_id``.
    """
    _check_threshold(iou_threshold)
    det_by_image = _index_records(dets, "detections")
    gt_by_image = _index_records(gts, "ground truth")

    order = []
    for image_id, rec in det_by_image.items():
        for idx, box in enumerate(rec.boxes):
            if class_id is None or box.class_id == class_id:
                order.append((-box.confidence, image_id, idx, box))
    order.sort(key=lambda item: item[:3])

    taken: set[tuple[str, int]] = set()
    tp: dict[int, int] = defaultdict(int)
    fp: dict[int, int] = defaultdict(int)
    flagged = []
    for _, image_id, idx, box in order:
        best, best_j = -1.0, None
        gt_rec = gt_by_image.get(image_id)
        for j, gt in enumerate(gt_rec.boxes if gt_rec else ()):
            if gt.class_id != box.class_id or (image_id, j) in taken:
                continue
            overlap = iou(box.bbox, gt.bbox)
            if overlap >= iou_threshold and overlap > best:
                best, best_j = overlap, j
        if best_j is not None:
            taken.add((image_id, best_j))
            tp[box.class_id] += 1
        else:
            fp[box.class_id] += 1
        flagged.append(FlaggedDetection(image_id, idx, box.class_id, box.confidence, best_j is not None, best_j))

    n_gt: dict[int, int] = defaultdict(int)
    for rec in gt_by_image.values():
        for gt in rec.boxes:
            if class_id is None or gt.class_id == class_id:
                n_gt[gt.class_id] += 1

    classes = sorted(set(n_gt) | set(tp) | set(fp))
    counts = {c: MatchCounts(tp=tp[c], fp=fp[c], fn=n_gt[c] - tp[c]) for c in classes}
    return MatchResult(counts=counts, detections=tuple(flagged))


def precision_recall_f1(c: MatchCounts) -> tuple[float, float, float]:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class PrCurve:
    class_id: int
    iou_threshold: float
    points: tuple[tuple[float, float], ...]  # (recall, precision), raw sweep order


def _sweep(flags: Sequence[bool], n_gt: int) -> list[tuple[Fraction, Fraction]]:
    points = []
    tp = 0
    for k, hit in enumerate(flags, start=1):
        tp += hit
        points.append((Fraction(tp, n_gt), Fraction(tp, k)))
    return points


def _ap_from_points(points: list[tuple[Fraction, Fraction]], method: str) -> Fraction:
    if method == "all_point":
        # precision envelope: running max from the right
        envelope = [p for _, p in points]
        for i in range(len(envelope) - 2, -1, -1):
            envelope[i] = max(envelope[i], envelope[i + 1])
        area = Fraction(0)
        prev_recall = Fraction(0)
        for (r, _), p in zip(points, envelope):
            if r > prev_recall:
                area += (r - prev_recall) * p
                prev_recall = r
        return area
    if method == "11_point":
        total = Fraction(0)
        for i in range(11):
            level = Fraction(i, 10)
            total += max((p for r, p in points if r >= level), default=Fraction(0))
        return total / 11
    raise AccuracyError(f"unknown AP method {method!r}; expected one of {AP_METHODS}")


def pr_curve(
    dets: Iterable[DetectionRecord],
    gts: Iterable[DetectionRecord],
    class_id: int,
    iou_threshold: float = 0.5,
) -> PrCurve:
    dets, gts = list(dets), list(gts)
    result = match_detections(dets, gts, iou_threshold, class_id=class_id)
    n_gt = result.counts.get(class_id, MatchCounts()).tp + result.counts.get(class_id, MatchCounts()).fn
    if n_gt == 0:
        raise NoGroundTruthError(class_id)
    pts = _sweep([d.is_tp for d in result.detections], n_gt)
    return PrCurve(class_id, iou_threshold, tuple((float(r), float(p)) for r, p in pts))


def average_precision(
    dets: Iterable[DetectionRecord],
    gts: Iterable[DetectionRecord],
    class_id: int,
    iou_threshold: float = 0.5,
    method: str = "all_point",
) -> float:
    """Area under the enveloped precision-recall curve of one class.

    Raises :class:`NoGroundTruthError` if the class has no ground truth.
    """
    result = match_detections(dets, gts, iou_threshold, class_id=class_id)
    counts = result.counts.get(class_id, MatchCounts())
    n_gt = counts.tp + counts.fn
    if n_gt == 0:
        raise NoGroundTruthError(class_id)
    points = _sweep([d.is_tp for d in result.detections], n_gt)
    return float(_ap_from_points(points, method))


@dataclass(frozen=True)
class MapResult:
    map: float
    per_class: dict[int, float]
    iou_thresholds: tuple[float, ...]
    excluded_classes: tuple[int, ...] = ()


def mean_average_precision(
    dets: Iterable[DetectionRecord],
    gts: Iterable[DetectionRecord],
    iou_thresholds: Sequence[float] = SINGLE_IOU,
    method: str = "all_point",
) -> MapResult:
    """mAP over classes that have ground truth.

    With several IoU thresholds the per-class AP is averaged over thresholds
    before the class mean is taken. Classes that only appear in detections
    are reported in ``excluded_classes``.
    """
    thresholds = tuple(iou_thresholds)
    if not thresholds:
        raise AccuracyError("empty IoU threshold list")
    for t in thresholds:
        _check_threshold(t)
    dets, gts = list(dets), list(gts)
    gt_classes = sorted({b.class_id for rec in gts for b in rec.boxes})
    det_classes = {b.class_id for rec in dets for b in rec.boxes}
    if not gt_classes:
        raise AccuracyError("no class has ground-truth boxes")

    per_class: dict[int, float] = {}
    exact: list[Fraction] = []
    for c in gt_classes:
        aps = []
        for t in thresholds:
            result = match_detections(dets, gts, t, class_id=c)
            counts = result.counts[c]
            points = _sweep([d.is_tp for d in result.detections], counts.tp + counts.fn)
            aps.append(_ap_from_points(points, method))
        class_ap = sum(aps, Fraction(0)) / len(aps)
        exact.append(class_ap)
        per_class[c] = float(class_ap)
    mean = sum(exact, Fraction(0)) / len(exact)
    return MapResult(
        map=float(mean),
        per_class=per_class,
        iou_thresholds=thresholds,
        excluded_classes=tuple(sorted(det_classes - set(gt_classes))),
    )


# --------------------------------------------------------------------------
# log files
# --------------------------------------------------------------------------


def _read_jsonl(source: Union[str, Path, Iterable[str]]) -> list[tuple[int, dict]]:
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"line {lineno}: {exc}") from exc
        if not isinstance(doc, dict):
            raise LogFormatError(f"line {lineno}: record is not an object")
        out.append((lineno, doc))
    return out


def detect_log_kind(source: Union[str, Path, Iterable[str]]) -> str:
    """Return ``"detection"`` or ``"classification"`` from the first record."""
    records = _read_jsonl(source)
    if not records:
        raise LogFormatError("empty log")
    first = records[0][1]
    if "image_id" in first:
        return "detection"
    if "sample_id" in first:
        return "classification"
    raise LogFormatError("line 1: record has neither image_id nor sample_id")


def read_detection_log(source, with_confidence: bool = True) -> list[DetectionRecord]:
    """Parse a JSON-lines detection log (predictions or ground truth)."""
    records = []
    for lineno, doc in _read_jsonl(source):
        try:
            image_id = str(doc["image_id"])
            boxes = []
            for b in doc.get("boxes", []):
                bbox = tuple(float(v) for v in b["bbox"])
                if len(bbox) != 4:
                    raise LogFormatError(f"line {lineno}: bbox needs 4 coordinates")
                class_id = b["class_id"]
                if not isinstance(class_id, int) or class_id < 0:
                    raise LogFormatError(f"line {lineno}: class_id must be a non-negative integer")
                conf = float(b["confidence"]) if with_confidence else 1.0
                boxes.append(Box(bbox, class_id, conf))
        except KeyError as exc:
            raise LogFormatError(f"line {lineno}: missing field {exc}") from exc
        except AccuracyError as exc:
            if isinstance(exc, LogFormatError):
                raise
            raise LogFormatError(f"line {lineno}: {exc}") from exc
        records.append(DetectionRecord(image_id, tuple(boxes)))
    return records


def read_classification_log(
    predictions, ground_truth=None
) -> list[ClassificationRecord]:
    """Parse classification predictions, joining labels from ``ground_truth``.

    Prediction records carry ``sample_id`` and either ``scores`` (an object
    mapping class id to score) or ``ranked`` (list of class ids). The label
    comes from a ``label`` field in the ground-truth log, or from a
    ``true_label`` field on the prediction itself.
    """
    labels: dict[str, int] = {}
    if ground_truth is not None:
        for lineno, doc in _read_jsonl(ground_truth):
            try:
                labels[str(doc["sample_id"])] = int(doc["label"])
            except (KeyError, TypeError, ValueError) as exc:
                raise LogFormatError(f"ground truth line {lineno}: {exc}") from exc

    records = []
    for lineno, doc in _read_jsonl(predictions):
        try:
            sid = str(doc["sample_id"])
            if "true_label" in doc:
                label = int(doc["true_label"])
            elif sid in labels:
                label = labels[sid]
            else:
                raise LogFormatError(f"line {lineno}: no ground-truth label for sample {sid!r}")
            if "ranked" in doc:
                rec = ClassificationRecord(sid, label, ranked=tuple(int(c) for c in doc["ranked"]))
            else:
                scores = {int(c): float(s) for c, s in doc["scores"].items()}
                rec = ClassificationRecord(sid, label, scores=scores)
        except KeyError as exc:
            raise LogFormatError(f"line {lineno}: missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, LogFormatError):
                raise
            raise LogFormatError(f"line {lineno}: {exc}") from exc
        records.append(rec)
    return records


def read_label_map(path: Union[str, Path]) -> dict[int, str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(k): str(v) for k, v in doc.items()}
