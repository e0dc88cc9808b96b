import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthdrive import meshes
from synthdrive.errors import SceneStructureError, ValidationError
from synthdrive.scene import (
    CULLED, Camera, LodGroup, Material, Mesh, Scene, SceneNode, Texture, Transform, frustum_cull,
    quat_from_axis_angle, scene_from_dict, scene_to_dict, scene_to_json, select_lod, world_transform,
)


def test_root_identity():
    scene = Scene()
    root = scene.add(name="root")
    assert np.array_equal(world_transform(root), np.eye(4))


def test_translation_composition():
    scene = Scene()
    parent = scene.add(local=Transform((1, 0, 0)))
    child = scene.add(parent, local=Transform((2, 0, 0)))
    assert np.allclose(world_transform(child)[:3, 3], (3, 0, 0))


def test_parent_scale_applies_to_child_offset():
    scene = Scene()
    parent = scene.add(local=Transform(scale=2.0))
    child = scene.add(parent, local=Transform((1, 0, 0)))
    assert np.allclose(world_transform(child)[:3, 3], (2, 0, 0))


def test_world_matrices_match_per_node():
    scene = Scene()
    a = scene.add(local=Transform((1, 2, 3), quat_from_axis_angle((0, 1, 0), 0.3)))
    b = scene.add(a, local=Transform((0, 1, 0), scale=(1, 2, 1)))
    c = scene.add(b, local=Transform((4, 0, 0), quat_from_axis_angle((1, 0, 0), 1.0)))
    worlds = scene.world_matrices()
    for node in (a, b, c):
        assert np.allclose(worlds[node.id], world_transform(node))


def test_transform_validation():
    with pytest.raises(ValidationError):
        Transform(rotation=(1, 1, 0, 0))
    with pytest.raises(ValidationError):
        Transform(scale=(1, 0, 1))


def test_cycle_rejected():
    scene = Scene()
    a = scene.add()
    b = scene.add(a)
    with pytest.raises(SceneStructureError):
        scene.attach(a, b)


def test_world_transform_detects_handmade_cycle():
    a = SceneNode(1)
    b = SceneNode(2, parent=a)
    a.parent = b
    with pytest.raises(SceneStructureError):
        world_transform(a)


def test_ids_unique_and_start_at_one():
    scene = Scene()
    nodes = [scene.add() for _ in range(10)]
    assert [n.id for n in nodes] == list(range(1, 11))


def test_mesh_aabb_and_index_check():
    m = Mesh([(0, 0, 0), (1, 2, 3), (-1, 5, 0)], [(0, 1, 2)])
    assert np.array_equal(m.aabb, [[-1, 0, 0], [1, 5, 3]])
    with pytest.raises(ValidationError):
        Mesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 3)])


def test_power_of_two_texture_rule():
    Material((0.5, 0.5, 0.5), Texture("brick", 256, 128))
    with pytest.raises(ValidationError):
        Material((0.5, 0.5, 0.5), Texture("brick", 250, 128))
    with pytest.raises(ValidationError):
        Material((1.5, 0.5, 0.5))


def test_lod_thresholds_must_decrease():
    box = meshes.box()
    with pytest.raises(ValidationError):
        LodGroup([(box, 0.1), (box, 0.5)])
    with pytest.raises(ValidationError):
        LodGroup([])


def _camera_at_origin(scene=None, **kw):
    scene = scene or Scene()
    return Camera(scene.add(name="cam"), **kw)


def _lod_node(scene, z, size=2.0):
    group = LodGroup([(meshes.box((size, size, size)), 0.5), (meshes.box((size, size, size)), 0.1)])
    return scene.add(local=Transform((0, 0, z)), renderable=group), group


def test_select_lod_levels_by_coverage():
    scene = Scene()
    cam = _camera_at_origin(scene)
    near_node, group = _lod_node(scene, -0.5)  # straddles the near plane -> coverage 1
    assert select_lod(group, near_node, cam) == 0
    # a 2 m cube at distance d covers about (2 f / d)^2 / 512^2 of the image
    f = cam.focal
    d_mid = 2 * f / (512 * math.sqrt(0.2))
    mid, _ = _lod_node(scene, -(d_mid + 1.0))
    assert select_lod(group, mid, cam) == 1
    far, _ = _lod_node(scene, -500.0)
    assert select_lod(group, far, cam) == CULLED


def test_select_lod_behind_camera_is_culled():
    scene = Scene()
    cam = _camera_at_origin(scene)
    node, group = _lod_node(scene, 20.0)
    assert select_lod(group, node, cam) == CULLED


@given(st.floats(2.0, 300.0), st.floats(0.01, 50.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_select_lod_monotone_in_distance(d, extra, dx, dy):
    scene = Scene()
    cam = _camera_at_origin(scene)
    group = LodGroup([(meshes.box(), 0.2), (meshes.box(), 0.02), (meshes.box(), 0.001)])
    direction = np.array([dx, dy, -1.0])
    direction /= np.linalg.norm(direction)
    a = scene.add(local=Transform(direction * d), renderable=group)
    b = scene.add(local=Transform(direction * (d + extra)), renderable=group)
    la, lb = select_lod(group, a, cam), select_lod(group, b, cam)
    rank = lambda level: 99 if level == CULLED else level
    assert rank(lb) >= rank(la)


def test_frustum_cull_examples():
    scene = Scene()
    cam = _camera_at_origin(scene)
    ahead = scene.add(local=Transform((0, 0, -10)), renderable=meshes.box())
    behind = scene.add(local=Transform((0, 0, 10)), renderable=meshes.box())
    # side plane at 60 deg vfov, square image: |x| = d * tan(30 deg)
    edge = 10 * math.tan(math.radians(30))
    straddle = scene.add(local=Transform((edge, 0, -10)), renderable=meshes.box())
    outside = scene.add(local=Transform((edge + 5, 0, -10)), renderable=meshes.box())
    kept = frustum_cull(cam, [ahead, behind, straddle, outside])
    assert kept == [ahead, straddle]


def test_frustum_cull_far_plane():
    scene = Scene()
    cam = _camera_at_origin(scene, far=50.0)
    beyond = scene.add(local=Transform((0, 0, -60)), renderable=meshes.box())
    assert frustum_cull(cam, [beyond]) == []


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-math.pi, math.pi), st.floats(0.2, 3.0))
def test_identity_intermediate_node_keeps_world_transform(pos, angle, scale):
    scene = Scene()
    parent = scene.add(local=Transform(pos, quat_from_axis_angle((0.3, 1, 0.2), angle), scale))
    child = scene.add(parent, local=Transform((1, -2, 0.5), quat_from_axis_angle((1, 0, 0), angle / 2)))
    before = world_transform(child)
    middle = scene.add(parent)
    scene.attach(child, middle)
    assert np.allclose(world_transform(child), before, atol=1e-9)


def test_scene_json_round_trip():
    scene = Scene()
    root = scene.add(name="car", kind="vehicle", label="car", renderable=meshes.car_lod(),
                     material=Material((0.2, 0.3, 0.4)), local=Transform((1, 2, 3)))
    scene.add(root, name="sign", renderable=meshes.box(), material=Material((1, 1, 1), Texture("s", 64, 64)))
    data = scene_to_dict(scene, include_geometry=True)
    text = json.dumps(data)
    again = scene_from_dict(json.loads(text))
    assert scene_to_json(again, include_geometry=True) == scene_to_json(scene, include_geometry=True)
    assert data["format"] == "synthdrive-scene"
