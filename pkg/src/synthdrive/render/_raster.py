"""Compiled triangle rasterizer.

Single-threaded on purpose: triangles are drawn in input order with a strict
depth test, so the output is bit-identical on every run.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _clip_near(tri, near, out):
    """Sutherland-Hodgman clip of one view-space triangle against ``depth >= near``.

    Writes up to four vertices into ``out`` and returns how many.
    """
    n = 0
    for i in range(3):
        a = tri[i]
        b = tri[(i + 1) % 3]
        da = -a[2]
        db = -b[2]
        a_in = da >= near
        b_in = db >= near
        if a_in:
            out[n, 0] = a[0]
            out[n, 1] = a[1]
            out[n, 2] = a[2]
            n += 1
        if a_in != b_in:
            t = (da - near) / (da - db)
            out[n, 0] = a[0] + t * (b[0] - a[0])
            out[n, 1] = a[1] + t * (b[1] - a[1])
            out[n, 2] = -near
            n += 1
    return n


@njit(cache=True)
def _fill(x0, y0, w0, x1, y1, w1, x2, y2, w2, colour, ident,
          width, height, inv_far, color_buf, inv_depth, inst):
    # w* are inverse depths; front faces have negative signed area (y points down)
    area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    if not area < 0.0:
        return
    xmin = max(int(math.floor(min(x0, min(x1, x2)))), 0)
    xmax = min(int(math.ceil(max(x0, max(x1, x2)))), width - 1)
    ymin = max(int(math.floor(min(y0, min(y1, y2)))), 0)
    ymax = min(int(math.ceil(max(y0, max(y1, y2)))), height - 1)
    inv_area = 1.0 / area
    for py in range(ymin, ymax + 1):
        cy = py + 0.5
        for px in range(xmin, xmax + 1):
            cx = px + 0.5
            b0 = ((x1 - cx) * (y2 - cy) - (x2 - cx) * (y1 - cy)) * inv_area
            b1 = ((x2 - cx) * (y0 - cy) - (x0 - cx) * (y2 - cy)) * inv_area
            b2 = ((x0 - cx) * (y1 - cy) - (x1 - cx) * (y0 - cy)) * inv_area
            if b0 < 0.0 or b1 < 0.0 or b2 < 0.0:
                continue
            iw = b0 * w0 + b1 * w1 + b2 * w2
            if iw > inv_depth[py, px] and iw >= inv_far:
                inv_depth[py, px] = iw
                inst[py, px] = ident
                color_buf[py, px, 0] = colour[0]
                color_buf[py, px, 1] = colour[1]
                color_buf[py, px, 2] = colour[2]


@njit(cache=True)
def raster_triangles(tris, colours, ids, width, height, focal, near, far, color_buf, inv_depth, inst):
    """Draw view-space triangles ``tris`` (T, 3, 3) into the three buffers.

    ``inv_depth`` holds 1/depth (0 for background) so a larger value is
    nearer; interpolating it linearly in screen space is perspective correct.
    """
    clipped = np.empty((4, 3))
    proj = np.empty((4, 3))
    cx = width / 2.0
    cy = height / 2.0
    inv_far = 1.0 / far
    for t in range(tris.shape[0]):
        tri = tris[t]
        if -tri[0, 2] < near and -tri[1, 2] < near and -tri[2, 2] < near:
            continue
        n = _clip_near(tri, near, clipped)
        if n < 3:
            continue
        for k in range(n):
            d = -clipped[k, 2]
            proj[k, 0] = cx + focal * clipped[k, 0] / d
            proj[k, 1] = cy - focal * clipped[k, 1] / d
            proj[k, 2] = 1.0 / d
        for k in range(1, n - 1):
            _fill(proj[0, 0], proj[0, 1], proj[0, 2],
                  proj[k, 0], proj[k, 1], proj[k, 2],
                  proj[k + 1, 0], proj[k + 1, 1], proj[k + 1, 2],
                  colours[t], ids[t], width, height, inv_far, color_buf, inv_depth, inst)
