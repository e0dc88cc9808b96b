"""Modular buildings assembled from wall, roof, door and window modules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import meshes
from ..errors import ValidationError
from ..rng import substream
from ..scene import Material, Mesh, Scene, SceneNode, Transform, quat_from_axis_angle

DEFAULT_PALETTE = [
    (0.86, 0.82, 0.72),
    (0.78, 0.55, 0.42),
    (0.93, 0.91, 0.86),
    (0.62, 0.70, 0.74),
    (0.85, 0.74, 0.50),
    (0.70, 0.40, 0.35),
]
ROOF_COLOURS = [(0.45, 0.18, 0.15), (0.30, 0.30, 0.32), (0.52, 0.30, 0.20)]


@dataclass
class BuildingKit:
    wall: Mesh
    roof: Mesh
    door: Mesh
    window: Mesh
    palette: list = field(default_factory=lambda: list(DEFAULT_PALETTE))
    module_size: float = 4.0
    wall_height: float = 3.0

    def __post_init__(self):
        for name in ("wall", "roof", "door", "window"):
            if len(getattr(self, name)) == 0:
                raise ValidationError(f"kit module {name!r} has no triangles")
        if not self.palette:
            raise ValidationError("kit palette is empty")


def house_kit(module_size: float = 4.0, wall_height: float = 3.0, palette: Optional[list] = None) -> BuildingKit:
    m, h = module_size, wall_height
    return BuildingKit(
        wall=meshes.box((m, h, 0.2), (0, h / 2, 0)),
        roof=meshes.pyramid((m, m), 0.4 * m),
        door=meshes.box((1.0, 2.1, 0.05), (0, 1.05, 0)),
        window=meshes.box((1.2, 1.0, 0.05), (0, 1.7, 0)),
        palette=list(palette or DEFAULT_PALETTE),
        module_size=m,
        wall_height=h,
    )


def industrial_kit() -> BuildingKit:
    m, h = 10.0, 8.0
    return BuildingKit(
        wall=meshes.box((m, h, 0.4), (0, h / 2, 0)),
        roof=meshes.box((m, 0.6, m), (0, 0.3, 0)),
        door=meshes.box((4.0, 5.0, 0.05), (0, 2.5, 0)),
        window=meshes.box((6.0, 1.2, 0.05), (0, 6.0, 0)),
        palette=[(0.55, 0.58, 0.60), (0.42, 0.47, 0.52), (0.72, 0.70, 0.64)],
        module_size=m,
        wall_height=h,
    )


def _yaw(angle):
    return quat_from_axis_angle((0, 1, 0), angle)


def assemble_building(
    scene: Scene,
    kit: BuildingKit,
    footprint: Sequence[int],
    seed: int,
    parent: Optional[SceneNode] = None,
    transform: Optional[Transform] = None,
    window_probability: float = 0.6,
) -> SceneNode:
    """Build one house: perimeter walls, one roof per footprint cell,
    a seeded door and windows, walls painted with a seeded palette colour."""
    nx, nz = (int(v) for v in footprint)
    if nx < 1 or nz < 1:
        raise ValidationError(f"footprint must be at least 1x1, got {footprint}")
    rng = substream(seed, "building")
    m = kit.module_size
    colour_index = int(rng.integers(len(kit.palette)))
    albedo = tuple(kit.palette[colour_index])
    roof_albedo = ROOF_COLOURS[int(rng.integers(len(ROOF_COLOURS)))]
    root = scene.add(
        parent, name="building", kind="building", local=transform or Transform(),
        meta={"footprint": [nx, nz], "palette_index": colour_index, "albedo": list(albedo)},
    )
    half_x, half_z = nx * m / 2.0, nz * m / 2.0
    # (position, yaw) for every perimeter module; local -Z faces outward
    slots = []
    for i in range(nx):
        x = -half_x + (i + 0.5) * m
        slots.append(((x, 0.0, -half_z), 0.0))
        slots.append(((x, 0.0, half_z), math.pi))
    for j in range(nz):
        z = -half_z + (j + 0.5) * m
        slots.append(((half_x, 0.0, z), -math.pi / 2))
        slots.append(((-half_x, 0.0, z), math.pi / 2))
    door_slot = int(rng.integers(len(slots)))
    has_window = rng.random(len(slots)) < window_probability
    wall_material = Material(albedo)
    for k, (pos, yaw) in enumerate(slots):
        wall = scene.add(root, name="wall", kind="wall", local=Transform(pos, _yaw(yaw)),
                         renderable=kit.wall, material=wall_material)
        if k == door_slot:
            scene.add(wall, name="door", kind="door", local=Transform((0, 0, -0.15)),
                      renderable=kit.door, material=Material((0.35, 0.22, 0.12)))
        elif has_window[k]:
            scene.add(wall, name="window", kind="window", local=Transform((0, 0, -0.15)),
                      renderable=kit.window, material=Material((0.55, 0.70, 0.80)))
    roof_material = Material(roof_albedo)
    for i in range(nx):
        for j in range(nz):
            pos = (-half_x + (i + 0.5) * m, kit.wall_height, -half_z + (j + 0.5) * m)
            scene.add(root, name="roof", kind="roof", local=Transform(pos),
                      renderable=kit.roof, material=roof_material)
    return root


def augment_building_colors(
    buildings: Sequence[SceneNode],
    fraction: float,
    seed: int,
    palette: Optional[list] = None,
) -> list:
    """Repaint ``round(fraction * len(buildings))`` buildings (halves round up).

    A repainted building gets a palette colour different from its current
    one, tinted per channel. Only wall materials change; meshes are shared
    and untouched. Returns the repainted building roots.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction must be in [0, 1], got {fraction}")
    palette = list(palette or DEFAULT_PALETTE)
    count = int(math.floor(fraction * len(buildings) + 0.5))
    if count == 0:
        return []
    rng = substream(seed, "augment-colours")
    chosen = np.sort(rng.choice(len(buildings), size=count, replace=False))
    mutated = []
    for idx in chosen:
        root = buildings[int(idx)]
        current = root.meta.get("palette_index", -1)
        options = [i for i in range(len(palette)) if i != current] or [0]
        pick = options[int(rng.integers(len(options)))]
        tint = rng.uniform(0.85, 1.15, size=3)
        albedo = tuple(float(c) for c in np.clip(np.asarray(palette[pick]) * tint, 0.0, 1.0))
        material = Material(albedo)
        for node in root.iter_subtree():
            if node.kind == "wall":
                node.material = material
        root.meta.update({"palette_index": pick, "albedo": list(albedo), "augmented": True})
        mutated.append(root)
    return mutated
