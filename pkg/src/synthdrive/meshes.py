"""Primitive mesh builders. All faces are wound counter-clockwise seen from outside."""
import numpy as np

from .scene import LodGroup, Mesh


def _oriented(tri_vertices, tris, outward):
    v = tri_vertices
    out = []
    for (a, b, c), n_out in zip(tris, outward):
        n = np.cross(v[b] - v[a], v[c] - v[a])
        out.append((a, b, c) if np.dot(n, n_out) >= 0 else (a, c, b))
    return out


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> Mesh:
    sx, sy, sz = (float(s) / 2.0 for s in size)
    c = np.asarray(center, dtype=float)
    verts = np.array([[x, y, z] for x in (-sx, sx) for y in (-sy, sy) for z in (-sz, sz)]) + c
    # vertex index = 4*xb + 2*yb + zb
    quads = [
        ((4, 5, 7, 6), (1, 0, 0)), ((0, 2, 3, 1), (-1, 0, 0)),
        ((2, 6, 7, 3), (0, 1, 0)), ((0, 1, 5, 4), (0, -1, 0)),
        ((1, 3, 7, 5), (0, 0, 1)), ((0, 4, 6, 2), (0, 0, -1)),
    ]
    tris, normals = [], []
    for (a, b, cc, d), n in quads:
        tris += [(a, b, cc), (a, cc, d)]
        normals += [n, n]
    return Mesh(verts, _oriented(verts, tris, np.array(normals, dtype=float)))


def pyramid(base=(1.0, 1.0), height=1.0, center=(0.0, 0.0, 0.0)) -> Mesh:
    """Square pyramid standing on ``center`` (base at center y)."""
    bx, bz = base[0] / 2.0, base[1] / 2.0
    c = np.asarray(center, dtype=float)
    verts = np.array([[-bx, 0, -bz], [bx, 0, -bz], [bx, 0, bz], [-bx, 0, bz], [0, height, 0]], dtype=float) + c
    tris, normals = [(0, 2, 1), (0, 3, 2)], [(0, -1, 0), (0, -1, 0)]
    for i in range(4):
        a, b = i, (i + 1) % 4
        n = (verts[a] + verts[b]) / 2.0 - c
        n[1] = 0.0
        tris.append((a, b, 4))
        normals.append(n)
    return Mesh(verts, _oriented(verts, tris, np.array(normals, dtype=float)))


def ribbon(left, right) -> Mesh:
    """Strip between two polylines of equal length; faces point up (+Y)."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    n = len(left)
    verts = np.empty((2 * n, 3))
    verts[0::2] = left
    verts[1::2] = right
    tris = []
    for i in range(n - 1):
        l0, r0, l1, r1 = 2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3
        tris += [(l0, r0, r1), (l0, r1, l1)]
    tris = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if len(tris):
        # orient by the up component of each face normal
        a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
        ny = np.cross(b - a, c - a)[:, 1]
        flip = ny < 0
        tris[flip] = tris[flip][:, [0, 2, 1]]
    return Mesh(verts, tris)


def wall_strip(path, height: float, thickness: float) -> Mesh:
    """Closed barrier wall following ``path`` (n x 3 ground points)."""
    path = np.asarray(path, dtype=float)
    d = np.gradient(path[:, [0, 2]], axis=0)
    d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-12)
    side = np.stack([-d[:, 1], np.zeros(len(d)), d[:, 0]], axis=1) * (thickness / 2.0)
    up = np.array([0.0, height, 0.0])
    a, b = path + side, path - side
    rings = [a, a + up, b + up, b]  # closed cross-section
    n = len(path)
    verts = np.concatenate(rings)
    tris, normals = [], []
    centre = path + up / 2.0
    for k in range(4):
        r0, r1 = k * n, ((k + 1) % 4) * n
        for i in range(n - 1):
            quad = (r0 + i, r0 + i + 1, r1 + i + 1, r1 + i)
            mid = verts[list(quad)].mean(axis=0)
            outward = mid - (centre[i] + centre[i + 1]) / 2.0
            tris += [(quad[0], quad[1], quad[2]), (quad[0], quad[2], quad[3])]
            normals += [outward, outward]
    return Mesh(verts, _oriented(verts, tris, np.array(normals)))


def grid_surface(xs, zs, heights) -> Mesh:
    """Height grid with rows along z; faces point up."""
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    nz, nx = heights.shape
    gx, gz = np.meshgrid(xs, zs)
    verts = np.stack([gx.ravel(), np.asarray(heights, dtype=float).ravel(), gz.ravel()], axis=1)
    idx = np.arange(nz * nx).reshape(nz, nx)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c, d = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
    # (a, c, b) winds counter-clockwise seen from +Y for x right, z toward viewer
    tris = np.concatenate([np.stack([a, c, b], 1), np.stack([b, c, d], 1)])
    return Mesh(verts, tris)


# --------------------------------------------------------------------------
# target-class and prop models; forward is -Z, origin on the ground


def car_lod() -> LodGroup:
    detailed = Mesh.merge([
        box((1.8, 0.7, 4.4), (0, 0.65, 0)),
        box((1.6, 0.55, 2.3), (0, 1.275, 0.2)),
        box((0.25, 0.6, 0.6), (-0.85, 0.3, -1.35)),
        box((0.25, 0.6, 0.6), (0.85, 0.3, -1.35)),
        box((0.25, 0.6, 0.6), (-0.85, 0.3, 1.35)),
        box((0.25, 0.6, 0.6), (0.85, 0.3, 1.35)),
    ])
    coarse = box((1.8, 1.55, 4.4), (0, 0.775, 0))
    return LodGroup([(detailed, 0.002), (coarse, 0.0)])


def truck_lod() -> LodGroup:
    detailed = Mesh.merge([
        box((2.4, 2.6, 2.2), (0, 1.7, -2.9)),
        box((2.5, 3.0, 5.6), (0, 2.0, 1.0)),
        box((2.2, 0.9, 7.8), (0, 0.45, 0)),
    ])
    coarse = box((2.5, 3.5, 8.0), (0, 1.75, 0))
    return LodGroup([(detailed, 0.002), (coarse, 0.0)])


def person_lod() -> LodGroup:
    detailed = Mesh.merge([
        box((0.2, 0.85, 0.25), (-0.12, 0.425, 0)),
        box((0.2, 0.85, 0.25), (0.12, 0.425, 0)),
        box((0.5, 0.65, 0.3), (0, 1.175, 0)),
        box((0.25, 0.25, 0.25), (0, 1.625, 0)),
    ])
    coarse = box((0.5, 1.75, 0.3), (0, 0.875, 0))
    return LodGroup([(detailed, 0.001), (coarse, 0.0)])


def tree_mesh(height: float = 6.0) -> Mesh:
    trunk = box((0.4, height * 0.4, 0.4), (0, height * 0.2, 0))
    crown = pyramid((height * 0.5, height * 0.5), height * 0.7, (0, height * 0.3, 0))
    return Mesh.merge([trunk, crown])


def lamp_post_mesh() -> Mesh:
    return Mesh.merge([box((0.15, 6.0, 0.15), (0, 3.0, 0)), box((0.3, 0.2, 1.2), (0, 6.0, -0.5))])
