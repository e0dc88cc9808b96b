"""Detection metrics: IoU, greedy matching, AP/mAP and summary rates.

Boxes are ``(cx, cy, w, h)`` normalized to the image. Matching is done per
image and class: detections in descending confidence (ties keep input order)
each take the highest-IoU unmatched ground truth at or above the threshold.
"""
from __future__ import annotations

import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import FormatError, ValidationError

IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class Detection:
    image: str
    class_id: int
    bbox: tuple
    confidence: float

    def __post_init__(self):
        _check_box(self.bbox)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    image: str
    class_id: int
    bbox: tuple

    def __post_init__(self):
        _check_box(self.bbox)


def _check_box(bbox):
    if len(bbox) != 4:
        raise ValidationError(f"bbox needs 4 values, got {bbox}")
    cx, cy, w, h = bbox
    if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0 and 0.0 < w <= 1.0 and 0.0 < h <= 1.0):
        raise ValidationError(f"bbox {bbox} is not a normalized (cx, cy, w, h) box")


def _corners(boxes):
    b = np.asarray(boxes, dtype=float).reshape(-1, 4)
    return np.stack([b[:, 0] - b[:, 2] / 2, b[:, 1] - b[:, 3] / 2, b[:, 0] + b[:, 2] / 2, b[:, 1] + b[:, 3] / 2], 1)


def iou_matrix(a, b) -> np.ndarray:
    ca, cb = _corners(a), _corners(b)
    iw = np.clip(np.minimum(ca[:, None, 2], cb[None, :, 2]) - np.maximum(ca[:, None, 0], cb[None, :, 0]), 0, None)
    ih = np.clip(np.minimum(ca[:, None, 3], cb[None, :, 3]) - np.maximum(ca[:, None, 1], cb[None, :, 1]), 0, None)
    inter = iw * ih
    area_a = (ca[:, 2] - ca[:, 0]) * (ca[:, 3] - ca[:, 1])
    area_b = (cb[:, 2] - cb[:, 0]) * (cb[:, 3] - cb[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def iou(a, b) -> float:
    return float(iou_matrix([a], [b])[0, 0])


@dataclass
class MatchResult:
    tp: list
    fp: list
    fn: list
    # per detection, in ranked order: (detection, is_tp)
    ranked: list = field(default_factory=list)


def rank(dets: Sequence[Detection]) -> list:
    """Detections by descending confidence; equal confidences keep input order."""
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    return [dets[i] for i in order]


def match_detections(dets: Sequence[Detection], gts: Sequence[GroundTruth],
                     iou_threshold: float = IOU_THRESHOLD) -> MatchResult:
    gt_groups = defaultdict(list)
    for g in gts:
        gt_groups[(g.image, g.class_id)].append(g)
    iou_cache = {}
    used = {key: np.zeros(len(group), dtype=bool) for key, group in gt_groups.items()}
    ranked = rank(dets)
    det_groups = defaultdict(list)
    for d in ranked:
        det_groups[(d.image, d.class_id)].append(d)
    for key, group in det_groups.items():
        if key in gt_groups:
            iou_cache[key] = iou_matrix([d.bbox for d in group], [g.bbox for g in gt_groups[key]])
    position = defaultdict(int)
    tp, fp, flags = [], [], []
    for d in ranked:
        key = (d.image, d.class_id)
        row = position[key]
        position[key] += 1
        hit = False
        if key in iou_cache:
            ious = np.where(used[key], -1.0, iou_cache[key][row])
            j = int(np.argmax(ious))
            if ious[j] >= iou_threshold:
                used[key][j] = True
                hit = True
        (tp if hit else fp).append(d)
        flags.append((d, hit))
    fn = [g for key, group in gt_groups.items() for g, u in zip(group, used[key]) if not u]
    return MatchResult(tp, fp, fn, flags)


def _ap_from_flags(confidences: np.ndarray, is_tp: np.ndarray, n_gt: int) -> float:
    """All-points AP from ranked detections, evaluated at distinct confidences only."""
    if n_gt == 0:
        raise ValueError("AP is undefined without ground truths")
    if len(is_tp) == 0:
        return 0.0
    ctp = np.cumsum(is_tp)
    cfp = np.cumsum(~is_tp)
    # last index of every run of equal confidence
    ends = np.flatnonzero(np.r_[confidences[1:] != confidences[:-1], True])
    recall = ctp[ends] / n_gt
    precision = ctp[ends] / (ctp[ends] + cfp[ends])
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev) * envelope))


def average_precision(dets: Sequence[Detection], gts: Sequence[GroundTruth], class_id: int,
                      iou_threshold: float = IOU_THRESHOLD) -> Optional[float]:
    """Area under the precision envelope for one class; None when it has no ground truth."""
    cd = [d for d in dets if d.class_id == class_id]
    cg = [g for g in gts if g.class_id == class_id]
    if not cg:
        return None
    m = match_detections(cd, cg, iou_threshold)
    conf = np.array([d.confidence for d, _ in m.ranked], dtype=float)
    flags = np.array([hit for _, hit in m.ranked], dtype=bool)
    return _ap_from_flags(conf, flags, len(cg))


def mean_average_precision(dets, gts, classes: Sequence[int] = (0, 1, 2),
                           iou_threshold: float = IOU_THRESHOLD) -> tuple:
    """``(mAP, {class: AP or None})``; classes without ground truth are left out of the mean."""
    per_class = {c: average_precision(dets, gts, c, iou_threshold) for c in classes}
    valid = [ap for ap in per_class.values() if ap is not None]
    skipped = [c for c, ap in per_class.items() if ap is None]
    if skipped:
        warnings.warn(f"classes {skipped} have no ground truth and are excluded from mAP", RuntimeWarning,
                      stacklevel=2)
    return (float(np.mean(valid)) if valid else 0.0), per_class


def summary_metrics(tp: int, fp: int, fn: int) -> dict:
    """Precision, recall, F1 and detection accuracy TP / (TP + FP + FN)."""
    if min(tp, fp, fn) < 0:
        raise ValidationError("counts must be >= 0")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return {
        "precision": precision,
        "recall": recall,
        "f1": f1_score(precision, recall),
        "accuracy": tp / (tp + fp + fn) if tp + fp + fn else 0.0,
    }


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


@dataclass
class EvalReport:
    per_class: dict  # name -> {precision, recall, f1, ap, tp, fp, fn, ground_truths}
    precision: float
    recall: float
    f1: float
    accuracy: float
    map: float
    tp: int
    fp: int
    fn: int
    iou_threshold: float = IOU_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "map": self.map,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "per_class": self.per_class,
        }

    def table(self, system: str = "detector") -> str:
        """Plain-text table: System, Accuracy, Precision, Recall, mAP, F1."""
        header = f"{'System':<16} {'Accuracy':>8} {'Precision':>9} {'Recall':>6} {'mAP':>6} {'F1':>6}"
        row = (f"{system:<16} {self.accuracy:>8.3f} {self.precision:>9.3f} {self.recall:>6.3f} "
               f"{self.map:>6.3f} {self.f1:>6.3f}")
        return header + "\n" + row + "\n"


def evaluate(dets: Sequence[Detection], gts: Sequence[GroundTruth], class_names: Sequence[str] = ("car", "person", "truck"),
             iou_threshold: float = IOU_THRESHOLD) -> EvalReport:
    classes = list(range(len(class_names)))
    result = match_detections(dets, gts, iou_threshold)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_ap, aps = mean_average_precision(dets, gts, classes, iou_threshold)
    skipped = [class_names[c] for c in classes if aps[c] is None]
    if skipped:
        warnings.warn(f"classes {skipped} have no ground truth and are excluded from mAP", RuntimeWarning,
                      stacklevel=2)
    per_class = {}
    for c in classes:
        tp = sum(d.class_id == c for d in result.tp)
        fp = sum(d.class_id == c for d in result.fp)
        fn = sum(g.class_id == c for g in result.fn)
        s = summary_metrics(tp, fp, fn)
        per_class[class_names[c]] = {
            "precision": s["precision"], "recall": s["recall"], "f1": s["f1"], "ap": aps[c],
            "tp": tp, "fp": fp, "fn": fn, "ground_truths": tp + fn,
        }
    s = summary_metrics(len(result.tp), len(result.fp), len(result.fn))
    return EvalReport(per_class, s["precision"], s["recall"], s["f1"], s["accuracy"], mean_ap,
                      len(result.tp), len(result.fp), len(result.fn), iou_threshold)


# --------------------------------------------------------------------------
# detections as JSON lines: {"image", "class", "bbox": [cx, cy, w, h], "confidence"}


def write_detections(path, dets: Sequence[Detection]):
    with open(Path(path), "w", encoding="utf-8") as fh:
        for d in dets:
            fh.write(json.dumps({"image": d.image, "class": d.class_id, "bbox": [float(v) for v in d.bbox],
                                 "confidence": float(d.confidence)}) + "\n")


def read_detections(path) -> list:
    out = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Detection(str(rec["image"]), int(rec["class"]), tuple(rec["bbox"]), float(rec["confidence"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad detection record ({exc})") from exc
    return out


def ground_truth_from_labels(labels: dict) -> list:
    """Flatten ``{image: YoloLabelFile}`` into GroundTruth records."""
    return [GroundTruth(image, b.class_id, (b.cx, b.cy, b.w, b.h)) for image, f in labels.items() for b in f.boxes]
