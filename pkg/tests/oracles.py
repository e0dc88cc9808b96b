"""Independent reference implementations used as test oracles.

These are deliberately naive (plain loops, no shared helpers with the
package) so that agreement is meaningful.
"""
import math

import numpy as np


def box_iou(a, b):
    ax0, ay0, ax1, ay1 = a[0] - a[2] / 2, a[1] - a[3] / 2, a[0] + a[2] / 2, a[1] + a[3] / 2
    bx0, by0, bx1, by1 = b[0] - b[2] / 2, b[1] - b[3] / 2, b[0] + b[2] / 2, b[1] + b[3] / 2
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = a[2] * a[3] + b[2] * b[3] - inter
    return inter / union if union > 0 else 0.0


def greedy_counts(dets, gts, thr=0.5):
    """(tp, fp) for detections given as (image, cls, box, conf) tuples."""
    order = sorted(range(len(dets)), key=lambda i: (-dets[i][3], i))
    taken = set()
    tp = fp = 0
    for i in order:
        img, cls, box, _ = dets[i]
        best, best_j = -1.0, None
        for j, (gimg, gcls, gbox) in enumerate(gts):
            if gimg != img or gcls != cls or j in taken:
                continue
            v = box_iou(box, gbox)
            if v > best:
                best, best_j = v, j
        if best_j is not None and best >= thr:
            taken.add(best_j)
            tp += 1
        else:
            fp += 1
    return tp, fp


def ap_bruteforce(dets, gts, cls, thr=0.5):
    """Enumerate every confidence cut point, re-match, integrate the envelope."""
    dets = [d for d in dets if d[1] == cls]
    gts = [g for g in gts if g[1] == cls]
    if not gts:
        return None
    points = []
    for tau in sorted({d[3] for d in dets}, reverse=True):
        subset = [d for d in dets if d[3] >= tau]
        tp, fp = greedy_counts(subset, gts, thr)
        points.append((tp / len(gts), tp / (tp + fp)))
    if not points:
        return 0.0
    recalls = sorted({r for r, _ in points})
    area, prev = 0.0, 0.0
    for r in recalls:
        p_interp = max(p for rr, p in points if rr >= r)
        area += (r - prev) * p_interp
        prev = r
    return area


def mask_bounds(instance, ident):
    """Tight (x, y, w, h) of the pixels equal to ``ident`` plus their count."""
    ys, xs = np.where(instance == ident)
    if len(xs) == 0:
        return None, 0
    return (int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)), len(xs)


def ray_cast(tris, ids, width, height, focal, near=0.1, far=1e9):
    """Per-pixel nearest front-facing hit along rays through pixel centres.

    Returns (id buffer, depth buffer, margin buffer); the margin is the
    smallest distance, in barycentric units, from the ray to any edge of any
    front-facing triangle it meets, so callers can skip pixels that sit on an
    edge of either a winner or a loser.
    """
    out = np.zeros((height, width), dtype=np.int64)
    depth = np.full((height, width), np.inf)
    margin = np.full((height, width), np.inf)
    for py in range(height):
        for px in range(width):
            d = np.array([(px + 0.5 - width / 2) / focal, -(py + 0.5 - height / 2) / focal, -1.0])
            for t, tri in enumerate(tris):
                v0, v1, v2 = (np.asarray(v, float) for v in tri)
                n = np.cross(v1 - v0, v2 - v0)
                if np.dot(n, d) >= 0:  # back face or parallel
                    continue
                s = np.dot(n, v0) / np.dot(n, d)
                if s <= 0:
                    continue
                p = s * d
                # barycentric via sub-areas against the normal
                area = np.dot(n, n)
                b0 = np.dot(np.cross(v2 - v1, p - v1), n) / area
                b1 = np.dot(np.cross(v0 - v2, p - v2), n) / area
                b2 = 1.0 - b0 - b1
                m = min(b0, b1, b2)
                margin[py, px] = min(margin[py, px], abs(m))
                if m < 0:
                    continue
                dep = s  # view depth equals ray parameter since d_z = -1
                if dep < near or dep > far:
                    continue
                if dep < depth[py, px]:
                    depth[py, px] = dep
                    out[py, px] = ids[t]
    return out, depth, margin


def dfl_formula(left_bin, right_bin, y, s_left, s_right):
    return -((right_bin - y) * math.log(s_left) + (y - left_bin) * math.log(s_right))
