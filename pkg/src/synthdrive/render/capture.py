"""Perception capture: car-mounted camera, frame rendering and pixel-tight labels."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError, FormatError
from ..rng import substream
from ..scene import TARGET_LABELS, Camera, LodGroup, Scene, SceneNode, Transform
from .raster import Framebuffer, Lighting, rasterize

VISIBILITY_THRESHOLD = 20
CAMERA_HEIGHT = 1.1


@dataclass(frozen=True)
class Annotation:
    instance_id: int
    label: str
    origin: tuple  # (x, y) top-left pixel
    dimension: tuple  # (w, h) pixels
    visible_pixels: int


@dataclass
class CapturedFrame:
    index: int
    framebuffer: Framebuffer
    annotations: list = field(default_factory=list)

    @property
    def image(self) -> np.ndarray:
        return self.framebuffer.color

    def __iter__(self):
        # unpacks as (image, annotations)
        return iter((self.image, self.annotations))


def mount_camera(scene: Scene, seed: int, vertical_fov: float = 60.0, resolution=(512, 512),
                 near: float = 0.1, far: float = 1000.0) -> Camera:
    """Camera on the front bumper of a seeded-uniformly chosen car, facing forward.

    The camera node hangs off the car (so it inherits the car's motion) but is
    not registered as one of the car's children, which keeps the scene's own
    node set unchanged.
    """
    cars = sorted(scene.find(label="car"), key=lambda n: n.id)
    if not cars:
        raise ConfigError("scene has no car to mount the camera on")
    car = cars[int(substream(seed, "camera").integers(len(cars)))]
    box = car.renderable.levels[0][0].aabb if isinstance(car.renderable, LodGroup) else car.local_aabb()
    front = float(box[0][2]) - 0.05 if box is not None else 0.0
    node = SceneNode(id=-1, name="camera", kind="camera", local=Transform((0.0, CAMERA_HEIGHT, front)), parent=car)
    return Camera(node, vertical_fov=vertical_fov, near=near, far=far, resolution=tuple(resolution))


def annotate(instance: np.ndarray, labels: dict, threshold: int = VISIBILITY_THRESHOLD) -> list:
    """Tight pixel bounds of every labelled instance with enough visible pixels.

    ``labels`` maps instance id to class label; ids not in it are ignored.
    Annotations come back sorted by instance id.
    """
    if not labels:
        return []
    h, w = instance.shape
    flat = instance.ravel()
    wanted = np.fromiter(labels.keys(), dtype=np.int64)
    pix = np.flatnonzero(np.isin(flat, wanted))
    if len(pix) == 0:
        return []
    ids = flat[pix]
    order = np.argsort(ids, kind="stable")
    ids, pix = ids[order], pix[order]
    starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
    counts = np.diff(np.r_[starts, len(ids)])
    ys, xs = pix // w, pix % w
    x0, x1 = np.minimum.reduceat(xs, starts), np.maximum.reduceat(xs, starts)
    y0, y1 = np.minimum.reduceat(ys, starts), np.maximum.reduceat(ys, starts)
    out = []
    for k, start in enumerate(starts):
        if counts[k] < threshold:
            continue
        ident = int(ids[start])
        out.append(Annotation(ident, labels[ident], (int(x0[k]), int(y0[k])),
                              (int(x1[k] - x0[k] + 1), int(y1[k] - y0[k] + 1)), int(counts[k])))
    return out


def capture_frame(scene: Scene, cam: Camera, frame_index: int, lighting: Optional[Lighting] = None,
                  threshold: int = VISIBILITY_THRESHOLD, worlds: Optional[dict] = None) -> CapturedFrame:
    """Render one frame and label the visible cars, people and trucks.

    The car carrying the camera is never labelled.
    """
    fb = rasterize(scene, cam, lighting, worlds)
    mount = cam.node.parent.id if cam.node.parent is not None else None
    labels = {n.id: n.label for n in scene if n.label in TARGET_LABELS and n.id != mount}
    return CapturedFrame(int(frame_index), fb, annotate(fb.instance, labels, threshold))


def frame_filename(sequence: int, index: int) -> str:
    return f"frame_{int(sequence)}_{int(index):06d}.ppm"


def write_ppm(path, image: np.ndarray):
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("PPM output expects an (H, W, 3) uint8 image")
    h, w, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image).tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode("ascii"))
        pos = end
    if tokens[0] != "P6" or tokens[3] != "255":
        raise FormatError(f"{path}: expected a binary PPM with maxval 255")
    w, h = int(tokens[1]), int(tokens[2])
    pos += 1
    return np.frombuffer(data[pos:pos + w * h * 3], dtype=np.uint8).reshape(h, w, 3).copy()
