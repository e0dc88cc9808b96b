"""Polyline utilities on the ground plane and in 3D."""
import numpy as np


def arc_lengths(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def point_at(points, cum, s):
    """Position and unit direction at arc length ``s`` (clamped to the ends)."""
    points = np.asarray(points, dtype=float)
    s = min(max(float(s), 0.0), float(cum[-1]))
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(points) - 2)
    seg_len = cum[i + 1] - cum[i]
    d = points[i + 1] - points[i]
    t = 0.0 if seg_len <= 0 else (s - cum[i]) / seg_len
    direction = d / seg_len if seg_len > 0 else d
    return points[i] + t * d, direction


def project(points_xz, polyline_xz):
    """Closest-point query of many 2D points against one 2D polyline.

    Returns ``(distance, arc_param)`` where ``arc_param`` is the arc length of
    the closest point measured along the polyline.
    """
    p = np.asarray(points_xz, dtype=float).reshape(-1, 2)
    line = np.asarray(polyline_xz, dtype=float).reshape(-1, 2)
    cum = arc_lengths(line)
    best = np.full(len(p), np.inf)
    param = np.zeros(len(p))
    for i in range(len(line) - 1):
        a, b = line[i], line[i + 1]
        ab = b - a
        denom = float(ab @ ab)
        t = np.zeros(len(p)) if denom == 0 else np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
        closest = a + t[:, None] * ab
        d = np.hypot(p[:, 0] - closest[:, 0], p[:, 1] - closest[:, 1])
        better = d < best
        best[better] = d[better]
        param[better] = cum[i] + t[better] * np.sqrt(denom)
    return best, param


def distance(points_xz, polyline_xz) -> np.ndarray:
    return project(points_xz, polyline_xz)[0]


def offset(points_xz, amount: float) -> np.ndarray:
    """Offset a 2D polyline sideways; positive ``amount`` goes to the left
    of the travel direction when looking down from +Y (x right, z down)."""
    p = np.asarray(points_xz, dtype=float)
    d = np.gradient(p, axis=0)
    d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-12)
    left = np.stack([d[:, 1], -d[:, 0]], axis=1)
    return p + amount * left
