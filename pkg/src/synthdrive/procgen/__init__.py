from .buildings import BuildingKit, assemble_building, augment_building_colors, house_kit, industrial_kit
from .presets import PRESETS, GeneratedScene, SceneSpec, generate_scene
from .roads import BuiltRoad, Markings, RoadSpline, build_road
from .terrain import Heightfield, Stamp, TerrainRules, apply_stamp, classify_terrain, export_pgm, scatter_vegetation

__all__ = [
    "BuildingKit", "assemble_building", "augment_building_colors", "house_kit", "industrial_kit",
    "PRESETS", "GeneratedScene", "SceneSpec", "generate_scene",
    "BuiltRoad", "Markings", "RoadSpline", "build_road",
    "Heightfield", "Stamp", "TerrainRules", "apply_stamp", "classify_terrain", "export_pgm", "scatter_vegetation",
]
