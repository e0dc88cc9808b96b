"""Box, classification and distribution focal losses of a YOLO-style detector."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError

EPS = 1e-12


def _xyxy(box):
    cx, cy, w, h = (float(v) for v in box)
    return cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2


def ciou(pred, target) -> float:
    """Complete IoU of two ``(cx, cy, w, h)`` boxes."""
    px0, py0, px1, py1 = _xyxy(pred)
    tx0, ty0, tx1, ty1 = _xyxy(target)
    pw, ph = px1 - px0, py1 - py0
    tw, th = tx1 - tx0, ty1 - ty0
    if min(pw, ph, tw, th) <= 0:
        raise ValidationError("boxes need positive width and height")
    inter = max(0.0, min(px1, tx1) - max(px0, tx0)) * max(0.0, min(py1, ty1) - max(py0, ty0))
    union = pw * ph + tw * th - inter
    iou = inter / union
    # squared centre distance over squared diagonal of the enclosing box
    rho2 = ((px0 + px1 - tx0 - tx1) ** 2 + (py0 + py1 - ty0 - ty1) ** 2) / 4.0
    c2 = (max(px1, tx1) - min(px0, tx0)) ** 2 + (max(py1, ty1) - min(py0, ty0)) ** 2
    v = (4.0 / math.pi ** 2) * (math.atan(tw / th) - math.atan(pw / ph)) ** 2
    alpha = v / ((1.0 - iou) + v + EPS) if v > 0 else 0.0
    return iou - rho2 / c2 - alpha * v


def box_loss(pred, target) -> float:
    return 1.0 - ciou(pred, target)


def _check_distribution(p, name):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise ValidationError(f"{name} must be a non-empty vector")
    if np.any(p < 0) or np.any(p > 1):
        raise ValidationError(f"{name} entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValidationError(f"{name} must sum to 1 (got {p.sum():.8f})")
    return p


def cls_loss(probs, target) -> float:
    """Binary cross-entropy averaged over classes.

    ``target`` is a class index or a one-hot / soft target vector.
    """
    p = _check_distribution(probs, "class probabilities")
    if np.ndim(target) == 0:
        t = np.zeros_like(p)
        t[int(target)] = 1.0
    else:
        t = np.asarray(target, dtype=float)
        if t.shape != p.shape:
            raise ValidationError("target and probabilities differ in length")
    terms = t * np.log(np.maximum(p, EPS)) + (1.0 - t) * np.log(np.maximum(1.0 - p, EPS))
    return float(-terms.mean())


def dfl_loss(distribution, target: float) -> float:
    """Distribution focal loss for a continuous target over bins 0..n-1.

    With ``i = floor(y)`` (the last pair of bins for ``y = n-1``):
    ``-((i + 1 - y) * log S_i + (y - i) * log S_{i+1})``.
    """
    s = _check_distribution(distribution, "distribution")
    n = len(s)
    y = float(target)
    if n < 2:
        raise ValidationError("distribution needs at least two bins")
    if not 0.0 <= y <= n - 1:
        raise ValidationError(f"target {y} outside the bin range [0, {n - 1}]")
    i = min(int(math.floor(y)), n - 2)
    wl, wr = (i + 1) - y, y - i
    return float(-(wl * math.log(max(s[i], EPS)) + wr * math.log(max(s[i + 1], EPS))))
