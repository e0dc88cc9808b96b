"""Vehicles following lanes and pedestrians walking paths, stepped at fixed dt.

Traffic keeps to the left of the road. Lanes are offset a quarter of the
road width from the centre line; roads meeting at a shared end point form a
junction, and a vehicle reaching the end of its lane continues onto a
seeded choice among the lanes leaving that junction.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import meshes, polyline
from .errors import ConfigError, ValidationError
from .rng import substream
from .scene import Material, Scene, SceneNode, Transform, heading_quat, world_aabb, world_transform

CAPTURE_DT = 1.0 / 30.0
TURN_SPEED = 7.0
MIN_SPAWN_GAP = 12.0


@dataclass(eq=False)
class Lane:
    id: int
    points: np.ndarray
    speed_limit: float
    road_index: int
    start_junction: str
    end_junction: str
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.cum = polyline.arc_lengths(self.points)

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    def pose(self, s: float):
        return polyline.point_at(self.points, self.cum, s)


def _junction_key(x: float, z: float) -> str:
    return f"{round(x, 2):.2f},{round(z, 2):.2f}"


@dataclass
class RoadNetwork:
    lanes: list
    successors: dict

    @property
    def total_lane_km(self) -> float:
        return sum(lane.length for lane in self.lanes) / 1000.0

    @classmethod
    def from_roads(cls, roads: Sequence) -> "RoadNetwork":
        """Two opposing lanes per road. ``roads`` items need ``centerline``
        (n x 3), ``width`` and ``spline.speed_limit``."""
        lanes = []
        for r_idx, road in enumerate(roads):
            c = np.asarray(road.centerline, dtype=float)
            xz = c[:, [0, 2]]
            a = _junction_key(*xz[0])
            b = _junction_key(*xz[-1])
            off = road.width / 4.0
            fwd = polyline.offset(xz, off)
            rev = polyline.offset(xz[::-1], off)
            limit = road.spline.speed_limit
            lanes.append(Lane(len(lanes), np.stack([fwd[:, 0], c[:, 1], fwd[:, 1]], 1), limit, r_idx, a, b))
            lanes.append(Lane(len(lanes), np.stack([rev[:, 0], c[::-1, 1], rev[:, 1]], 1), limit, r_idx, b, a))
        starts = {}
        for lane in lanes:
            starts.setdefault(lane.start_junction, []).append(lane.id)
        successors = {}
        for lane in lanes:
            options = starts.get(lane.end_junction, [])
            onward = [i for i in options if lanes[i].road_index != lane.road_index]
            successors[lane.id] = onward or list(options)
        return cls(lanes, successors)


@dataclass(eq=False)
class VehicleAgent:
    node: SceneNode
    lane: Lane
    arc_position: float
    speed: float
    speed_limit: float
    max_accel: float = 2.5
    max_decel: float = 5.0
    stopped: bool = False

    @property
    def id(self) -> int:
        return self.node.id

    @property
    def label(self) -> str:
        return self.node.label


@dataclass(eq=False)
class PedestrianAgent:
    node: SceneNode
    path: np.ndarray
    arc_position: float
    speed: float
    direction: float = 1.0
    stopped: bool = False
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=float)
        self.cum = polyline.arc_lengths(self.path)

    @property
    def id(self) -> int:
        return self.node.id

    @property
    def label(self) -> str:
        return self.node.label

    @property
    def length(self) -> float:
        return float(self.cum[-1])


TIMES_OF_DAY = ("dawn", "morning", "noon", "afternoon", "dusk", "night")
WEATHERS = ("clear", "overcast", "rain", "fog")


@dataclass
class TrafficConfig:
    density: float = 6.0  # vehicles per lane-km
    mix: dict = field(default_factory=lambda: {"car": 0.8, "truck": 0.2})
    time_of_day: str = "noon"
    weather: str = "clear"

    def __post_init__(self):
        if self.density < 0:
            raise ConfigError("traffic density must be >= 0")
        if set(self.mix) - {"car", "truck"} or any(v < 0 for v in self.mix.values()):
            raise ConfigError(f"bad vehicle mix {self.mix}")
        if abs(sum(self.mix.values()) - 1.0) > 1e-9:
            raise ConfigError(f"vehicle mix must sum to 1, got {sum(self.mix.values())}")
        if self.time_of_day not in TIMES_OF_DAY:
            raise ConfigError(f"unknown time_of_day {self.time_of_day!r}")
        if self.weather not in WEATHERS:
            raise ConfigError(f"unknown weather {self.weather!r}")


def _place(node: SceneNode, position, direction):
    horiz = math.hypot(direction[0], direction[2])
    rot = heading_quat(direction) if horiz > 0 or direction[1] != 0 else node.local.rotation
    node.local = Transform(position, rot)


def spawn_traffic(
    network: RoadNetwork,
    cfg: TrafficConfig,
    seed: int,
    scene: Optional[Scene] = None,
    parent: Optional[SceneNode] = None,
    min_gap: float = MIN_SPAWN_GAP,
) -> list:
    """``round(density * lane km)`` vehicles, at least ``min_gap`` apart per lane."""
    if not network.lanes:
        raise ValidationError("road network has no lanes")
    scene = scene if scene is not None else Scene()
    count = int(math.floor(cfg.density * network.total_lane_km + 0.5))
    rng = substream(seed, "traffic")
    lengths = np.array([lane.length for lane in network.lanes])
    probs = lengths / lengths.sum()
    kinds = sorted(cfg.mix)
    weights = np.array([cfg.mix[k] for k in kinds])
    taken = {}
    agents = []
    models = {"car": meshes.car_lod(), "truck": meshes.truck_lod()}
    for n in range(count):
        for _ in range(200):
            lane = network.lanes[int(rng.choice(len(lengths), p=probs))]
            s = float(rng.uniform(0.0, lane.length))
            if all(abs(s - t) >= min_gap for t in taken.get(lane.id, ())):
                break
        else:
            raise ConfigError(f"cannot fit {count} vehicles {min_gap} m apart on the network")
        taken.setdefault(lane.id, []).append(s)
        kind = kinds[int(rng.choice(len(kinds), p=weights))]
        limit = lane.speed_limit if kind == "car" else min(lane.speed_limit, 25.0)
        speed = float(rng.uniform(0.5, 1.0)) * limit
        node = scene.add(parent, name=f"{kind}-{n}", kind="vehicle", label=kind,
                         renderable=models[kind], material=_vehicle_material(rng, kind))
        pos, direction = lane.pose(s)
        _place(node, pos, direction)
        agents.append(VehicleAgent(
            node, lane, s, speed, limit,
            max_accel=2.5 if kind == "car" else 1.2,
            max_decel=5.0 if kind == "car" else 3.5,
        ))
    return agents


CAR_COLOURS = [(0.75, 0.08, 0.08), (0.1, 0.2, 0.6), (0.9, 0.9, 0.9), (0.1, 0.1, 0.1),
               (0.6, 0.6, 0.62), (0.85, 0.7, 0.1), (0.15, 0.45, 0.2)]


def _vehicle_material(rng, kind):
    if kind == "truck":
        return Material((0.85, 0.85, 0.8))
    return Material(CAR_COLOURS[int(rng.integers(len(CAR_COLOURS)))])


def spawn_pedestrians(
    paths: Sequence,
    count: int,
    seed: int,
    scene: Optional[Scene] = None,
    parent: Optional[SceneNode] = None,
    speed_range=(0.5, 2.0),
) -> list:
    """Place ``count`` walkers on ``paths`` (polylines), chosen by length."""
    scene = scene if scene is not None else Scene()
    if count == 0 or not paths:
        return []
    rng = substream(seed, "pedestrians")
    cums = [polyline.arc_lengths(p) for p in paths]
    lengths = np.array([c[-1] for c in cums])
    probs = lengths / lengths.sum()
    model = meshes.person_lod()
    agents = []
    for n in range(count):
        k = int(rng.choice(len(paths), p=probs))
        s = float(rng.uniform(0.0, lengths[k]))
        speed = float(rng.uniform(*speed_range))
        direction = 1.0 if rng.random() < 0.5 else -1.0
        shirt = tuple(float(c) for c in rng.uniform(0.1, 0.9, size=3))
        node = scene.add(parent, name=f"person-{n}", kind="pedestrian", label="person",
                         renderable=model, material=Material(shirt))
        agent = PedestrianAgent(node, np.asarray(paths[k]), s, speed, direction)
        _pose_pedestrian(agent)
        agents.append(agent)
    return agents


def _pose_pedestrian(p: PedestrianAgent):
    pos, d = polyline.point_at(p.path, p.cum, p.arc_position)
    _place(p.node, pos, np.asarray(d) * p.direction)


def _target_speed(v: VehicleAgent, network: RoadNetwork) -> float:
    target = v.speed_limit
    if len(network.successors.get(v.lane.id, ())) >= 2 and v.speed > TURN_SPEED:
        remaining = v.lane.length - v.arc_position
        braking = (v.speed ** 2 - TURN_SPEED ** 2) / (2.0 * v.max_decel)
        if remaining <= braking + v.speed * CAPTURE_DT:
            target = min(target, TURN_SPEED)
    return target


def step_vehicle(v: VehicleAgent, network: RoadNetwork, dt: float, rng: np.random.Generator):
    if v.stopped:
        return
    s = v.arc_position + v.speed * dt
    while s > v.lane.length:
        options = network.successors.get(v.lane.id, [])
        if not options:
            s = v.lane.length
            break
        s -= v.lane.length
        v.lane = network.lanes[options[int(rng.integers(len(options)))]]
        cap = v.lane.speed_limit if v.label != "truck" else min(v.lane.speed_limit, 25.0)
        v.speed_limit = cap
    v.arc_position = s
    target = _target_speed(v, network)
    if v.speed < target:
        v.speed = min(target, v.speed + v.max_accel * dt)
    elif v.speed > target:
        v.speed = max(target, v.speed - v.max_decel * dt)
    pos, d = v.lane.pose(s)
    _place(v.node, pos, d)


def step_pedestrian(p: PedestrianAgent, dt: float):
    if p.stopped:
        return
    length = p.length
    s = p.arc_position + p.direction * p.speed * dt
    while s < 0.0 or s > length:
        if s > length:
            s, p.direction = 2.0 * length - s, -1.0
        else:
            s, p.direction = -s, 1.0
    p.arc_position = s
    _pose_pedestrian(p)


def step(agents: Sequence, network: Optional[RoadNetwork], dt: float, rng: np.random.Generator) -> Sequence:
    """Advance every agent by ``dt`` seconds in list order (mutates, returns ``agents``)."""
    if not dt > 0:
        raise ValidationError("dt must be > 0")
    for a in agents:
        if isinstance(a, VehicleAgent):
            step_vehicle(a, network, dt, rng)
        else:
            step_pedestrian(a, dt)
    return agents


def _footprint(node: SceneNode, world: np.ndarray):
    """Ground-plane oriented rectangle: centre, two unit axes, two half extents."""
    lo, hi = node.local_aabb()
    centre_local = (lo + hi) / 2.0
    centre = world[:3, :3] @ centre_local + world[:3, 3]
    ax = world[:3, 0]
    az = world[:3, 2]
    ax2 = np.array([ax[0], ax[2]])
    az2 = np.array([az[0], az[2]])
    nx, nz = np.linalg.norm(ax2), np.linalg.norm(az2)
    half = (hi - lo) / 2.0
    return np.array([centre[0], centre[2]]), (ax2 / nx, az2 / nz), (half[0] * nx, half[2] * nz)


def _rects_overlap(a, b) -> bool:
    (ca, axes_a, ha), (cb, axes_b, hb) = a, b
    d = cb - ca
    for axis in (*axes_a, *axes_b):
        ra = sum(h * abs(axis @ u) for h, u in zip(ha, axes_a))
        rb = sum(h * abs(axis @ u) for h, u in zip(hb, axes_b))
        if abs(d @ axis) > ra + rb:
            return False
    return True


def detect_collisions(agents: Sequence, statics: Sequence = (), narrow_phase: bool = True) -> list:
    """Pairs of colliding ids; every agent in a pair is marked stopped.

    Broad phase is a world AABB overlap test. ``narrow_phase`` confirms
    agent-agent hits with oriented ground rectangles so that vehicles passing
    on diagonal roads do not stop on their inflated AABBs. Two pedestrians
    never collide with each other. ``statics`` are
    ``(id, world_aabb)`` pairs tested by AABB only. Meshes are never touched.
    """
    if not agents:
        return []
    worlds = [world_transform(a.node) for a in agents]
    boxes = np.stack([world_aabb(a.node, w) for a, w in zip(agents, worlds)])
    lo, hi = boxes[:, 0], boxes[:, 1]
    hit = np.all((lo[:, None, :] <= hi[None, :, :]) & (lo[None, :, :] <= hi[:, None, :]), axis=2)
    pairs = []
    for i, j in zip(*np.nonzero(np.triu(hit, k=1))):
        if isinstance(agents[i], PedestrianAgent) and isinstance(agents[j], PedestrianAgent):
            continue  # walkers pass each other on footpaths
        if narrow_phase and not _rects_overlap(_footprint(agents[i].node, worlds[i]),
                                                _footprint(agents[j].node, worlds[j])):
            continue
        pairs.append((agents[i].id, agents[j].id))
        agents[i].stopped = agents[j].stopped = True
    if len(statics):
        ids = [sid for sid, _ in statics]
        sboxes = np.stack([np.asarray(b, dtype=float) for _, b in statics])
        shit = np.all((lo[:, None, :] <= sboxes[None, :, 1]) & (sboxes[None, :, 0] <= hi[:, None, :]), axis=2)
        for i, k in zip(*np.nonzero(shit)):
            pairs.append((agents[i].id, ids[k]))
            agents[i].stopped = True
    for a in agents:
        if a.stopped and isinstance(a, VehicleAgent):
            a.speed = 0.0
    return pairs


class Simulation:
    """Vehicles, pedestrians and their turn-choice stream, stepped together."""

    def __init__(self, network, vehicles, pedestrians=(), statics=(), seed: int = 0, dt: float = CAPTURE_DT):
        self.network = network
        self.vehicles = list(vehicles)
        self.pedestrians = list(pedestrians)
        self.statics = list(statics)
        self.dt = dt
        self.frame = 0
        self.rng = substream(seed, "turns")
        self.collisions = []

    @property
    def agents(self) -> list:
        return self.vehicles + self.pedestrians

    def advance(self, steps: int = 1):
        for _ in range(steps):
            step(self.agents, self.network, self.dt, self.rng)
            self.collisions.extend(detect_collisions(self.agents, self.statics))
            self.frame += 1


class TrajectoryLog:
    """Rows of frame, agent_id, label, x, y, z, speed."""

    COLUMNS = ("frame", "agent_id", "label", "x", "y", "z", "speed")

    def __init__(self):
        self.rows = []

    def record(self, frame: int, agents: Sequence):
        for a in agents:
            x, y, z = a.node.local.position
            self.rows.append((frame, a.id, a.label, float(x), float(y), float(z), float(a.speed)))

    def write(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for frame, aid, label, x, y, z, speed in self.rows:
                w.writerow([frame, aid, label, f"{x:.4f}", f"{y:.4f}", f"{z:.4f}", f"{speed:.4f}"])
