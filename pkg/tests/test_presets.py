import numpy as np
import pytest

from synthdrive import polyline
from synthdrive.errors import ConfigError
from synthdrive.procgen import SceneSpec, generate_scene
from synthdrive.procgen.presets import COASTAL_BAND


def test_settlement_contract(settlement):
    sites = {n.meta["site"] for n in settlement.scene.find(kind="settlement")}
    assert sites == {"pond", "hill", "sea"}
    assert all(n.meta["buildings"] > 0 for n in settlement.scene.find(kind="settlement"))
    assert len(settlement.buildings) > 0
    (ind,) = settlement.scene.find(kind="industrial_complex")
    assert abs(ind.meta["center"][1] - settlement.features["coastline_z"]) <= COASTAL_BAND
    assert any(r.road_type == "highway" for r in settlement.roads)


def test_settlement_sites_match_terrain(settlement):
    hf = settlement.heightfield
    px, pz = settlement.features["pond"]
    assert hf.sample(px, pz) < hf.water_level
    hx, hz = settlement.features["hill"]
    assert hf.sample(hx, hz) > 20.0


def test_lowland_contract(lowland):
    assert lowland.buildings == []
    assert any(r.road_type == "highway" and r.spline.barriers for r in lowland.roads)
    kinds = {n.kind for n in lowland.scene}
    assert "settlement" not in kinds and "industrial_complex" not in kinds


@pytest.mark.parametrize("preset", ["settlement_complex", "mountain_lowland"])
def test_same_spec_same_serialization(preset):
    a = generate_scene(SceneSpec(preset, 42)).to_json()
    b = generate_scene(SceneSpec(preset, 42)).to_json()
    assert a == b
    assert a != generate_scene(SceneSpec(preset, 43)).to_json()


def test_vegetation_never_on_road(settlement, lowland):
    for gen in (settlement, lowland):
        pts = np.array([[p.position[0], p.position[2]] for p in gen.vegetation])
        for road in gen.roads:
            assert np.all(polyline.distance(pts, road.centerline_xz) > road.width / 2)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SceneSpec("downtown", 1)
    with pytest.raises(ConfigError):
        SceneSpec("mountain_lowland", 1, traffic_density=-1)
    with pytest.raises(ConfigError):
        SceneSpec("mountain_lowland", 1, weather="snowstorm")


def test_zero_pedestrians_when_density_zero():
    gen = generate_scene(SceneSpec("mountain_lowland", 3, pedestrian_density=0.0))
    assert gen.pedestrians == [] and gen.scene.find(label="person") == []


def test_agents_are_labelled_scene_nodes(settlement):
    labels = {v.label for v in settlement.vehicles}
    assert labels <= {"car", "truck"}
    assert all(settlement.scene.nodes[v.id] is v.node for v in settlement.vehicles)
    assert all(p.label == "person" for p in settlement.pedestrians)
