"""Dataset generation: scenes, simulation, capture and file output.

Configuration is one JSON file::

    {"scene":   {"preset": "settlement_complex" | [...], "seed": 7, ...SceneSpec fields},
     "capture": {"num_images": 100, "camera_seed": 11, "visibility_threshold": 20,
                 "frames_per_scene": 20, "warmup_steps": 30, "steps_between_frames": 15},
     "dataset": {"output_root": "out", "synth_take": 0, "split_ratio": 0.8, "split_seed": 0},
     "sampler": {"real_per_batch": 5, "synth_per_batch": 3, "seed": 0}}

``preset``, ``time_of_day`` and ``weather`` may be lists; scene k uses entry
``k mod len``. Seeds must be given explicitly.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError, IngestionError
from .formats import (
    CLASS_NAMES, DatasetEntry, DatasetManifest, SoloFrame, solo_json, solo_to_yolo, write_class_names,
    write_manifest,
)
from .procgen.presets import SceneSpec, generate_scene
from .render import Lighting, capture_frame, frame_filename, mount_camera, write_ppm
from .rng import derive_seed

log = logging.getLogger(__name__)

SCENE_KEYS = {f.name for f in fields(SceneSpec)}


@dataclass
class CaptureConfig:
    num_images: int
    camera_seed: int
    visibility_threshold: int = 20
    frames_per_scene: int = 20
    warmup_steps: int = 30
    steps_between_frames: int = 15


@dataclass
class DatasetConfig:
    output_root: str = "dataset"
    synth_take: int = 0
    split_ratio: float = 0.8
    split_seed: int = 0


@dataclass
class SamplerConfig:
    real_per_batch: int = 5
    synth_per_batch: int = 3
    seed: int = 0


@dataclass
class PipelineConfig:
    scene: dict
    capture: CaptureConfig
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"scene", "capture", "dataset", "sampler"}
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        scene = dict(data.get("scene") or {})
        if "seed" not in scene:
            raise ConfigError("scene.seed is required")
        bad = set(scene) - SCENE_KEYS
        if bad:
            raise ConfigError(f"unknown scene option(s): {sorted(bad)}")
        scene.setdefault("preset", "settlement_complex")
        capture = _section(CaptureConfig, data.get("capture"), "capture")
        cfg = cls(scene, capture, _section(DatasetConfig, data.get("dataset"), "dataset"),
                  _section(SamplerConfig, data.get("sampler"), "sampler"))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestionError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    def validate(self):
        c = self.capture
        if not isinstance(c.num_images, int) or c.num_images < 1:
            raise ConfigError(f"capture.num_images must be an integer >= 1, got {c.num_images!r}")
        if c.frames_per_scene < 1 or c.warmup_steps < 0 or c.steps_between_frames < 1:
            raise ConfigError("capture timing values out of range")
        if c.visibility_threshold < 1:
            raise ConfigError("capture.visibility_threshold must be >= 1")
        for k in range(min(self.num_sequences, 6)):
            self.scene_spec(k)  # surfaces bad presets and densities now

    @property
    def num_sequences(self) -> int:
        return math.ceil(self.capture.num_images / self.capture.frames_per_scene)

    def scene_spec(self, k: int) -> SceneSpec:
        values = {}
        for key, v in self.scene.items():
            if key == "seed":
                continue
            values[key] = v[k % len(v)] if isinstance(v, list) else v
        try:
            return SceneSpec(seed=derive_seed(int(self.scene["seed"]), "sequence", k), **values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scene settings: {exc}") from exc

    def with_seed(self, seed: int) -> "PipelineConfig":
        scene = dict(self.scene, seed=int(seed))
        return PipelineConfig(scene, self.capture, self.dataset, self.sampler)


def _section(kind, data, name):
    data = dict(data or {})
    known = {f.name for f in fields(kind)}
    bad = set(data) - known
    if bad:
        raise ConfigError(f"unknown {name} option(s): {sorted(bad)}")
    try:
        return kind(**data)
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def render_sequence(cfg: PipelineConfig, k: int, out: str) -> list:
    """Simulate scene ``k`` and write its frames; returns manifest entries with annotation counts."""
    cap = cfg.capture
    first = k * cap.frames_per_scene
    count = min(cap.frames_per_scene, cap.num_images - first)
    spec = cfg.scene_spec(k)
    gen = generate_scene(spec)
    if not gen.scene.find(label="car"):
        raise ConfigError(f"scene {k} has no cars to carry the camera; raise scene.traffic_density")
    cam = mount_camera(gen.scene, derive_seed(int(cap.camera_seed), "sequence", k))
    lighting = Lighting.preset(spec.time_of_day, spec.weather)
    sim = gen.simulation()
    sim.advance(cap.warmup_steps)
    root = Path(out)
    results = []
    for step in range(count):
        if step:
            sim.advance(cap.steps_between_frames)
        index = first + step
        frame = capture_frame(gen.scene, cam, index, lighting, cap.visibility_threshold)
        name = frame_filename(k, index)
        stem = Path(name).stem
        solo = SoloFrame.from_annotations(k, step, f"images/{name}", frame.annotations, (cam.width, cam.height))
        write_ppm(root / "images" / name, frame.image)
        (root / "solo" / f"{stem}.json").write_text(solo_json(solo), encoding="utf-8")
        (root / "labels" / f"{stem}.txt").write_text(solo_to_yolo(solo).to_text(), encoding="utf-8")
        results.append((f"images/{name}", f"labels/{stem}.txt", [a.label for a in frame.annotations]))
    log.info("sequence %d: %d frames (%s)", k, count, spec.preset)
    return results


def gen_dataset(cfg: PipelineConfig, out: Optional[str] = None, workers: int = 1) -> dict:
    """Write images/, labels/, solo/, manifest.json and classes.txt under ``out``.

    Output bytes depend only on ``cfg``: every scene is an independent task
    and results are collected in scene order, whatever ``workers`` is.
    """
    out = str(out or cfg.dataset.output_root)
    try:
        for sub in ("images", "labels", "solo"):
            os.makedirs(os.path.join(out, sub), exist_ok=True)
    except OSError as exc:
        raise IngestionError(f"cannot create output directory {out}: {exc}") from exc
    n = cfg.num_sequences
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n)) as pool:
            chunks = list(pool.map(render_sequence, [cfg] * n, range(n), [out] * n))
    else:
        chunks = [render_sequence(cfg, k, out) for k in range(n)]
    entries, label_counts = [], {name: 0 for name in CLASS_NAMES}
    for chunk in chunks:
        for image, label, labels in chunk:
            entries.append(DatasetEntry(image, label, "synthetic"))
            for name in labels:
                label_counts[name] += 1
    manifest = DatasetManifest("synthetic", "synthetic", ".", entries)
    write_manifest(os.path.join(out, "manifest.json"), manifest)
    write_class_names(os.path.join(out, "classes.txt"))
    return {"output": out, "images": len(entries), "sequences": n, "annotations": label_counts}
