"""Hierarchical scene graph, level-of-detail selection and frustum culling.

Conventions: right-handed world, +Y up, metres. A camera looks down its local
-Z axis. Quaternions are stored ``(w, x, y, z)``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .errors import SceneStructureError, ValidationError

TARGET_LABELS = ("car", "person", "truck")
CULLED = "culled"


# --------------------------------------------------------------------------
# quaternion helpers


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(angle / 2.0)
    return np.array([math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_mul(a, b) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def heading_quat(direction) -> np.ndarray:
    """Rotation turning local -Z onto ``direction`` (yaw about Y, then pitch)."""
    dx, dy, dz = (float(v) for v in direction)
    horiz = math.hypot(dx, dz)
    yaw = math.atan2(-dx, -dz) if horiz > 0 else 0.0
    pitch = math.atan2(dy, horiz)
    q = quat_mul(quat_from_axis_angle((0, 1, 0), yaw), quat_from_axis_angle((1, 0, 0), pitch))
    return q / np.linalg.norm(q)


# --------------------------------------------------------------------------
# domain types


@dataclass
class Transform:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=quat_identity)
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.position = np.array(self.position, dtype=float).reshape(3)
        self.rotation = np.array(self.rotation, dtype=float).reshape(4)
        scale = np.array(self.scale, dtype=float)
        self.scale = np.full(3, float(scale)) if scale.ndim == 0 else scale.reshape(3)
        norm = float(np.linalg.norm(self.rotation))
        if abs(norm - 1.0) > 1e-6:
            raise ValidationError(f"rotation quaternion norm {norm} is not 1")
        if np.any(self.scale <= 0):
            raise ValidationError(f"scale components must be > 0, got {self.scale}")

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation) * self.scale[None, :]
        m[:3, 3] = self.position
        return m


class Mesh:
    """Triangle mesh with counter-clockwise front faces."""

    def __init__(self, vertices, triangles, face_albedo=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ValidationError("triangle index out of range")
        # optional per-face colour overriding the node material
        self.face_albedo = None
        if face_albedo is not None:
            self.face_albedo = np.ascontiguousarray(face_albedo, dtype=np.float64).reshape(-1, 3)
            if len(self.face_albedo) != len(self.triangles):
                raise ValidationError("face_albedo needs one colour per triangle")
        if len(self.vertices):
            self.aabb = np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)])
        else:
            self.aabb = np.zeros((2, 3))
        self._digest = None

    def __len__(self):
        return len(self.triangles)

    def __repr__(self):
        return f"Mesh(vertices={len(self.vertices)}, triangles={len(self.triangles)})"

    @property
    def digest(self) -> str:
        if self._digest is None:
            h = hashlib.sha1(self.vertices.tobytes())
            h.update(self.triangles.tobytes())
            if self.face_albedo is not None:
                h.update(self.face_albedo.tobytes())
            self._digest = h.hexdigest()[:16]
        return self._digest

    @staticmethod
    def merge(meshes: Iterable["Mesh"]) -> "Mesh":
        verts, tris, offset = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            tris.append(m.triangles + offset)
            offset += len(m.vertices)
        if not verts:
            return Mesh(np.zeros((0, 3)), np.zeros((0, 3)))
        return Mesh(np.concatenate(verts), np.concatenate(tris))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Texture:
    name: str
    width: int
    height: int


@dataclass
class Material:
    albedo: tuple = (0.8, 0.8, 0.8)
    texture: Optional[Texture] = None

    def __post_init__(self):
        self.albedo = tuple(float(c) for c in self.albedo)
        if len(self.albedo) != 3 or any(not 0.0 <= c <= 1.0 for c in self.albedo):
            raise ValidationError(f"albedo must be RGB in [0,1], got {self.albedo}")
        if self.texture is not None:
            if not (is_power_of_two(self.texture.width) and is_power_of_two(self.texture.height)):
                raise ValidationError(
                    f"texture {self.texture.name!r} is {self.texture.width}x{self.texture.height};"
                    " both dimensions must be powers of two"
                )


@dataclass
class LodGroup:
    """Meshes ordered from most to least detailed with coverage thresholds."""

    levels: list

    def __post_init__(self):
        if not self.levels:
            raise ValidationError("LodGroup needs at least one level")
        thresholds = [float(t) for _, t in self.levels]
        if any(not 0.0 <= t <= 1.0 for t in thresholds):
            raise ValidationError("coverage thresholds must lie in [0, 1]")
        if any(b >= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValidationError(f"coverage thresholds must be strictly decreasing: {thresholds}")

    @property
    def thresholds(self):
        return [float(t) for _, t in self.levels]

    @property
    def aabb(self) -> np.ndarray:
        boxes = np.stack([m.aabb for m, _ in self.levels])
        return np.stack([boxes[:, 0].min(axis=0), boxes[:, 1].max(axis=0)])


Renderable = Union[Mesh, LodGroup]


@dataclass(eq=False)
class SceneNode:
    id: int
    name: str = ""
    kind: str = "group"
    label: Optional[str] = None
    local: Transform = field(default_factory=Transform)
    parent: Optional["SceneNode"] = None
    children: list = field(default_factory=list)
    renderable: Optional[Renderable] = None
    material: Optional[Material] = None
    meta: dict = field(default_factory=dict)

    def __repr__(self):
        return f"SceneNode(id={self.id}, kind={self.kind!r}, label={self.label!r})"

    def local_aabb(self) -> Optional[np.ndarray]:
        if self.renderable is None:
            return None
        return self.renderable.aabb

    def iter_subtree(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


class Scene:
    """A forest of :class:`SceneNode` with scene-wide unique integer ids.

    Ids start at 1 so that 0 can mean background in instance buffers.
    """

    def __init__(self):
        self.nodes: dict = {}
        self.roots: list = []
        self._next_id = 1

    def add(self, parent: Optional[SceneNode] = None, **kwargs) -> SceneNode:
        node = SceneNode(id=self._next_id, **kwargs)
        self._next_id += 1
        self.nodes[node.id] = node
        self.attach(node, parent)
        return node

    def attach(self, node: SceneNode, parent: Optional[SceneNode]):
        if node.parent is not None:
            node.parent.children.remove(node)
        elif node in self.roots:
            self.roots.remove(node)
        if parent is not None:
            p = parent
            while p is not None:
                if p is node:
                    raise SceneStructureError(f"attaching node {node.id} under {parent.id} creates a cycle")
                p = p.parent
            parent.children.append(node)
        else:
            self.roots.append(node)
        node.parent = parent

    def __iter__(self):
        for root in self.roots:
            yield from root.iter_subtree()

    def __len__(self):
        return len(self.nodes)

    def find(self, kind=None, label=None) -> list:
        return [
            n for n in self
            if (kind is None or n.kind == kind) and (label is None or n.label == label)
        ]

    def world_matrices(self) -> dict:
        """World matrix of every node, composed top-down in one pass."""
        out = {}
        stack = [(root, np.eye(4)) for root in reversed(self.roots)]
        while stack:
            node, parent_world = stack.pop()
            world = parent_world @ node.local.matrix()
            out[node.id] = world
            stack.extend((c, world) for c in reversed(node.children))
        return out


def world_transform(node: SceneNode) -> np.ndarray:
    """Compose local transforms from the root down to ``node``."""
    chain, seen = [], set()
    n = node
    while n is not None:
        if id(n) in seen:
            raise SceneStructureError(f"cycle detected above node {node.id}")
        seen.add(id(n))
        chain.append(n)
        n = n.parent
    m = np.eye(4)
    for n in reversed(chain):
        m = m @ n.local.matrix()
    return m


def box_corners(aabb) -> np.ndarray:
    lo, hi = np.asarray(aabb[0], float), np.asarray(aabb[1], float)
    return np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])


def transform_points(matrix, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points @ matrix[:3, :3].T + matrix[:3, 3]


def world_aabb(node: SceneNode, world: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
    box = node.local_aabb()
    if box is None:
        return None
    if world is None:
        world = world_transform(node)
    pts = transform_points(world, box_corners(box))
    return np.stack([pts.min(axis=0), pts.max(axis=0)])


def subtree_aabb(node: SceneNode, worlds: Optional[dict] = None) -> Optional[np.ndarray]:
    boxes = []
    for n in node.iter_subtree():
        b = world_aabb(n, None if worlds is None else worlds[n.id])
        if b is not None:
            boxes.append(b)
    if not boxes:
        return None
    boxes = np.stack(boxes)
    return np.stack([boxes[:, 0].min(axis=0), boxes[:, 1].max(axis=0)])


def aabb_overlap(a, b) -> bool:
    return bool(np.all(a[0] <= b[1]) and np.all(b[0] <= a[1]))


# --------------------------------------------------------------------------
# camera


@dataclass(eq=False)
class Camera:
    node: SceneNode
    vertical_fov: float = 60.0
    near: float = 0.1
    far: float = 1000.0
    resolution: tuple = (512, 512)

    def __post_init__(self):
        if not 0.0 < self.vertical_fov < 180.0:
            raise ValidationError(f"vertical_fov must be in (0, 180), got {self.vertical_fov}")
        if not 0.0 < self.near < self.far:
            raise ValidationError(f"need 0 < near < far, got near={self.near} far={self.far}")
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ValidationError(f"bad resolution {self.resolution}")
        self.resolution = (int(w), int(h))

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]

    @property
    def focal(self) -> float:
        """Focal length in pixels (square pixels)."""
        return (self.height / 2.0) / math.tan(math.radians(self.vertical_fov) / 2.0)

    def view_matrix(self, world: Optional[np.ndarray] = None) -> np.ndarray:
        if world is None:
            world = world_transform(self.node)
        return np.linalg.inv(world)

    def project(self, points_view) -> tuple:
        """Pixel coordinates and positive depth of view-space points."""
        p = np.asarray(points_view, dtype=float)
        depth = -p[..., 2]
        f = self.focal
        px = self.width / 2.0 + f * p[..., 0] / depth
        py = self.height / 2.0 - f * p[..., 1] / depth
        return px, py, depth


def _view_corners(node: SceneNode, cam: Camera, view: np.ndarray, world: Optional[np.ndarray]):
    box = world_aabb(node, world)
    if box is None:
        return None
    return transform_points(view, box_corners(box))


def screen_coverage(corners_view: np.ndarray, cam: Camera) -> Optional[float]:
    """Fraction of the image covered by the projected bounding rectangle.

    Returns None when the box lies entirely behind the camera and 1.0 when it
    crosses the near plane.
    """
    depth = -corners_view[:, 2]
    if np.all(depth <= 0):
        return None
    if np.any(depth <= cam.near):
        return 1.0
    px, py, _ = cam.project(corners_view)
    x0, x1 = max(px.min(), 0.0), min(px.max(), float(cam.width))
    y0, y1 = max(py.min(), 0.0), min(py.max(), float(cam.height))
    if x1 <= x0 or y1 <= y0:
        return 0.0
    return min(1.0, (x1 - x0) * (y1 - y0) / (cam.width * cam.height))


def select_lod(group: LodGroup, node: SceneNode, cam: Camera, world=None, view=None):
    """Index of the LOD level to draw for ``node`` or :data:`CULLED`."""
    if view is None:
        view = cam.view_matrix()
    box = group.aabb
    if world is None:
        world = world_transform(node)
    pts = transform_points(world, box_corners(box))
    wbox = np.stack([pts.min(axis=0), pts.max(axis=0)])
    coverage = screen_coverage(transform_points(view, box_corners(wbox)), cam)
    if coverage is None:
        return CULLED
    for i, t in enumerate(group.thresholds):
        if t <= coverage:
            return i
    return CULLED


def _inside_frustum(corners_view: np.ndarray, cam: Camera) -> bool:
    x, y, z = corners_view[:, 0], corners_view[:, 1], corners_view[:, 2]
    d = -z
    tx = (cam.width / 2.0) / cam.focal
    ty = (cam.height / 2.0) / cam.focal
    # reject only if all eight corners sit outside the same plane
    if np.all(d < cam.near) or np.all(d > cam.far):
        return False
    if np.all(x > d * tx) or np.all(x < -d * tx):
        return False
    if np.all(y > d * ty) or np.all(y < -d * ty):
        return False
    return True


def frustum_cull(cam: Camera, nodes: Iterable[SceneNode], worlds: Optional[dict] = None, view=None) -> list:
    """Renderable nodes whose world AABB touches the view frustum."""
    if view is None:
        view = cam.view_matrix()
    kept = []
    for node in nodes:
        world = worlds[node.id] if worlds is not None else None
        corners = _view_corners(node, cam, view, world)
        if corners is not None and _inside_frustum(corners, cam):
            kept.append(node)
    return kept


# --------------------------------------------------------------------------
# JSON serialization
#
# {"format": "synthdrive-scene", "version": 1,
#  "nodes": [{"id", "name", "kind", "label", "parent", "children",
#             "transform": {"position", "rotation", "scale"},
#             "renderable": null | {"type": "mesh", "mesh": <digest>}
#                                | {"type": "lod", "levels": [{"mesh", "coverage"}]},
#             "material": null | {"albedo", "texture": null | {"name", "width", "height"}},
#             "meta": {...}}],
#  "meshes": {<digest>: {"vertices": n, "triangles": m, "aabb": [min, max],
#                        "data": {"vertices": [...], "triangles": [...]}  (optional)}}}

SCENE_FORMAT = "synthdrive-scene"


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a).ravel()]


def _mesh_entry(mesh: Mesh, include_geometry: bool) -> dict:
    entry = {
        "vertices": int(len(mesh.vertices)),
        "triangles": int(len(mesh.triangles)),
        "aabb": [_floats(mesh.aabb[0]), _floats(mesh.aabb[1])],
    }
    if include_geometry:
        entry["data"] = {
            "vertices": mesh.vertices.tolist(),
            "triangles": mesh.triangles.tolist(),
        }
        if mesh.face_albedo is not None:
            entry["data"]["face_albedo"] = mesh.face_albedo.tolist()
    return entry


def scene_to_dict(scene: Scene, include_geometry: bool = False) -> dict:
    meshes = {}
    nodes = []
    for node in scene:
        r = node.renderable
        if isinstance(r, Mesh):
            meshes.setdefault(r.digest, _mesh_entry(r, include_geometry))
            rend = {"type": "mesh", "mesh": r.digest}
        elif isinstance(r, LodGroup):
            levels = []
            for m, t in r.levels:
                meshes.setdefault(m.digest, _mesh_entry(m, include_geometry))
                levels.append({"mesh": m.digest, "coverage": float(t)})
            rend = {"type": "lod", "levels": levels}
        else:
            rend = None
        mat = None
        if node.material is not None:
            tex = node.material.texture
            mat = {
                "albedo": list(node.material.albedo),
                "texture": None if tex is None else {"name": tex.name, "width": tex.width, "height": tex.height},
            }
        nodes.append({
            "id": node.id,
            "name": node.name,
            "kind": node.kind,
            "label": node.label,
            "parent": None if node.parent is None else node.parent.id,
            "children": [c.id for c in node.children],
            "transform": {
                "position": _floats(node.local.position),
                "rotation": _floats(node.local.rotation),
                "scale": _floats(node.local.scale),
            },
            "renderable": rend,
            "material": mat,
            "meta": node.meta,
        })
    return {"format": SCENE_FORMAT, "version": 1, "nodes": nodes, "meshes": meshes}


def scene_to_json(scene: Scene, include_geometry: bool = False) -> str:
    return json.dumps(scene_to_dict(scene, include_geometry), sort_keys=False, separators=(",", ":"))


def scene_from_dict(data: dict) -> Scene:
    """Rebuild a scene serialized with ``include_geometry=True``."""
    if data.get("format") != SCENE_FORMAT:
        raise ValidationError("not a synthdrive scene document")
    meshes = {}
    for digest, entry in data["meshes"].items():
        if "data" not in entry:
            raise ValidationError("scene was serialized without geometry")
        d = entry["data"]
        meshes[digest] = Mesh(d["vertices"], d["triangles"], d.get("face_albedo"))
    scene = Scene()
    by_id = {}
    for nd in data["nodes"]:
        t = nd["transform"]
        rend = nd["renderable"]
        if rend is None:
            renderable = None
        elif rend["type"] == "mesh":
            renderable = meshes[rend["mesh"]]
        else:
            renderable = LodGroup([(meshes[lv["mesh"]], lv["coverage"]) for lv in rend["levels"]])
        mat = None
        if nd["material"] is not None:
            tex = nd["material"]["texture"]
            mat = Material(tuple(nd["material"]["albedo"]), None if tex is None else Texture(**tex))
        node = SceneNode(
            id=nd["id"], name=nd["name"], kind=nd["kind"], label=nd["label"],
            local=Transform(t["position"], t["rotation"], t["scale"]),
            renderable=renderable, material=mat, meta=nd["meta"],
        )
        if node.id in by_id:
            raise SceneStructureError(f"duplicate node id {node.id}")
        by_id[node.id] = node
    for nd in data["nodes"]:
        node = by_id[nd["id"]]
        scene.nodes[node.id] = node
        parent = None if nd["parent"] is None else by_id[nd["parent"]]
        node.parent = parent
        if parent is None:
            scene.roots.append(node)
        else:
            parent.children.append(node)
    scene._next_id = max(by_id, default=0) + 1
    return scene
