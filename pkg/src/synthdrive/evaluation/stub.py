"""Seeded ground-truth perturbation standing in for a trained detector."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..rng import substream
from .metrics import Detection, GroundTruth

MIN_SIZE = 1e-6


@dataclass(frozen=True)
class ConfModel:
    """Uniform confidence ranges for kept boxes and spurious boxes."""

    tp_low: float = 0.5
    tp_high: float = 1.0
    fp_low: float = 0.05
    fp_high: float = 0.6

    def __post_init__(self):
        if not (0.0 <= self.tp_low <= self.tp_high <= 1.0 and 0.0 <= self.fp_low <= self.fp_high <= 1.0):
            raise ValidationError("confidence ranges must be ordered within [0, 1]")


def _clip_box(cx, cy, w, h):
    x0, y0 = max(cx - w / 2, 0.0), max(cy - h / 2, 0.0)
    x1, y1 = min(cx + w / 2, 1.0), min(cy + h / 2, 1.0)
    if x1 - x0 < MIN_SIZE or y1 - y0 < MIN_SIZE:
        return None
    return ((x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0)


def stub_detector(gts: Sequence[GroundTruth], jitter_px: float = 0.0, drop_rate: float = 0.0,
                  fp_rate: float = 0.0, conf_model: ConfModel = ConfModel(), seed: int = 0,
                  image_size: int = 512) -> list:
    """Detections derived from ``gts``.

    Every ground truth draws the same fixed block of random numbers whatever
    the rates are, so raising ``drop_rate`` only ever removes detections:
    box k is dropped when its uniform draw falls below the rate. Jitter is a
    normal offset of ``jitter_px`` pixels (sd) on centre and size. Each
    ground truth also spawns one random spurious box with probability
    ``fp_rate``.
    """
    for name, rate in (("drop_rate", drop_rate), ("fp_rate", fp_rate)):
        if not 0.0 <= rate <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {rate}")
    if jitter_px < 0:
        raise ValidationError("jitter_px must be >= 0")
    rng = substream(seed, "stub-detector")
    n = len(gts)
    u_drop = rng.random(n)
    noise = rng.standard_normal((n, 4)) * (jitter_px / image_size)
    u_conf = rng.random(n)
    u_fp = rng.random(n)
    fp_box = rng.random((n, 4))
    u_fp_conf = rng.random(n)
    out = []
    for k, g in enumerate(gts):
        if not u_drop[k] < drop_rate:
            cx, cy, w, h = g.bbox
            box = _clip_box(cx + noise[k, 0], cy + noise[k, 1], max(w + noise[k, 2], MIN_SIZE),
                            max(h + noise[k, 3], MIN_SIZE))
            if box is not None:
                conf = conf_model.tp_low + u_conf[k] * (conf_model.tp_high - conf_model.tp_low)
                out.append(Detection(g.image, g.class_id, box if jitter_px else tuple(g.bbox), float(conf)))
        if u_fp[k] < fp_rate:
            w, h = 0.02 + 0.2 * fp_box[k, 2], 0.02 + 0.2 * fp_box[k, 3]
            cx, cy = w / 2 + fp_box[k, 0] * (1 - w), h / 2 + fp_box[k, 1] * (1 - h)
            conf = conf_model.fp_low + u_fp_conf[k] * (conf_model.fp_high - conf_model.fp_low)
            out.append(Detection(g.image, g.class_id, (cx, cy, w, h), float(conf)))
    return out
