import warnings

import numpy as np
import pytest

from synthdrive.errors import ValidationError
from synthdrive.evaluation import GroundTruth, evaluate, match_detections, stub_detector


def ground_truths(n=60, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        w, h = rng.uniform(0.05, 0.3, 2)
        out.append(GroundTruth(f"img{k % 12}", int(rng.integers(3)),
                               (float(rng.uniform(w / 2, 1 - w / 2)), float(rng.uniform(h / 2, 1 - h / 2)),
                                float(w), float(h))))
    return out


def quiet_evaluate(dets, gts):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return evaluate(dets, gts)


def test_identity_detector():
    gts = ground_truths()
    dets = stub_detector(gts, seed=1)
    assert [(d.image, d.class_id, d.bbox) for d in dets] == [(g.image, g.class_id, g.bbox) for g in gts]
    assert quiet_evaluate(dets, gts).map == 1.0


def test_full_drop_gives_zero_recall():
    gts = ground_truths()
    dets = stub_detector(gts, drop_rate=1.0, seed=1)
    assert dets == []
    assert quiet_evaluate(dets, gts).recall == 0.0


def test_same_seed_same_detections():
    gts = ground_truths()
    kw = dict(jitter_px=3.0, drop_rate=0.2, fp_rate=0.3)
    assert stub_detector(gts, seed=5, **kw) == stub_detector(gts, seed=5, **kw)
    assert stub_detector(gts, seed=5, **kw) != stub_detector(gts, seed=6, **kw)


def test_drop_sweep_monotone():
    gts = ground_truths(200)
    recalls = [quiet_evaluate(stub_detector(gts, jitter_px=2.0, drop_rate=r, fp_rate=0.2, seed=3), gts).recall
               for r in (0.0, 0.2, 0.5, 1.0)]
    assert all(b <= a for a, b in zip(recalls, recalls[1:]))
    assert recalls[-1] == 0.0


def test_false_positive_rate_adds_unmatched_boxes():
    gts = ground_truths(100)
    dets = stub_detector(gts, fp_rate=1.0, seed=2)
    m = match_detections(dets, gts)
    assert len(dets) == 200 and len(m.tp) == 100


def test_rates_validated():
    with pytest.raises(ValidationError):
        stub_detector([], drop_rate=1.5)
    with pytest.raises(ValidationError):
        stub_detector([], jitter_px=-1)
