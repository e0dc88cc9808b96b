"""Annotation files and dataset manifests.

SOLO-subset frame JSON (keys always in this order, 2-space indent, trailing newline)::

    {"sequence": int, "step": int,
     "capture": {"filename": str, "dimension": [W, H]},
     "annotations": [{"instanceId": int, "labelName": str,
                      "origin": [x, y], "dimension": [w, h]}, ...]}

YOLO label files hold one ``class_id cx cy w h`` line per box, normalized by
the image size and printed with six decimals.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConversionError, FormatError, IngestionError, ValidationError
from .rng import substream

log = logging.getLogger(__name__)

CLASS_NAMES = ("car", "person", "truck")
LABEL_MAP = {name: i for i, name in enumerate(CLASS_NAMES)}
IMAGE_SUFFIXES = (".ppm", ".png", ".jpg", ".jpeg", ".bmp")
SPLITS = ("train", "val", "test")
DOMAINS = ("real", "synthetic", "mixed")


# --------------------------------------------------------------------------
# SOLO subset


@dataclass(frozen=True)
class SoloBox:
    instance_id: int
    label: str
    origin: tuple
    dimension: tuple


@dataclass
class SoloFrame:
    sequence: int
    step: int
    filename: str
    size: tuple = (512, 512)
    annotations: list = field(default_factory=list)

    @classmethod
    def from_annotations(cls, sequence, step, filename, annotations, size=(512, 512)) -> "SoloFrame":
        """Build from render annotations (anything with instance_id/label/origin/dimension)."""
        boxes = [SoloBox(a.instance_id, a.label, tuple(a.origin), tuple(a.dimension)) for a in annotations]
        return cls(int(sequence), int(step), str(filename), tuple(size), boxes)

    def validate(self):
        w, h = self.size
        if w <= 0 or h <= 0:
            raise ValidationError(f"{self.filename}: image dimension must be positive, got {self.size}")
        for b in self.annotations:
            (x, y), (bw, bh) = b.origin, b.dimension
            if bw < 1 or bh < 1 or x < 0 or y < 0 or x + bw > w or y + bh > h:
                raise ValidationError(
                    f"{self.filename}: box of instance {b.instance_id} origin {b.origin} dimension {b.dimension} "
                    f"is outside the {w}x{h} image"
                )

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence,
            "step": self.step,
            "capture": {"filename": self.filename, "dimension": [int(self.size[0]), int(self.size[1])]},
            "annotations": [
                {
                    "instanceId": int(b.instance_id),
                    "labelName": b.label,
                    "origin": [int(b.origin[0]), int(b.origin[1])],
                    "dimension": [int(b.dimension[0]), int(b.dimension[1])],
                }
                for b in self.annotations
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SoloFrame":
        try:
            cap = data["capture"]
            boxes = [
                SoloBox(int(a["instanceId"]), str(a["labelName"]), tuple(a["origin"]), tuple(a["dimension"]))
                for a in data["annotations"]
            ]
            return cls(int(data["sequence"]), int(data["step"]), str(cap["filename"]), tuple(cap["dimension"]), boxes)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed SOLO frame: {exc}") from exc


def solo_json(frame: SoloFrame) -> str:
    frame.validate()
    return json.dumps(frame.to_dict(), indent=2) + "\n"


def write_solo(path, frame: SoloFrame):
    text = solo_json(frame)
    Path(path).write_text(text, encoding="utf-8")


def read_solo(path) -> SoloFrame:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    return SoloFrame.from_dict(data)


# --------------------------------------------------------------------------
# YOLO labels


@dataclass(frozen=True)
class YoloBox:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def line(self) -> str:
        return f"{self.class_id} {self.cx:.6f} {self.cy:.6f} {self.w:.6f} {self.h:.6f}"

    def to_pixels(self, width: int, height: int) -> tuple:
        """(x, y, w, h) pixel box with top-left origin."""
        w, h = self.w * width, self.h * height
        return (self.cx * width - w / 2.0, self.cy * height - h / 2.0, w, h)


@dataclass
class YoloLabelFile:
    boxes: list = field(default_factory=list)

    def to_text(self) -> str:
        return "".join(b.line() + "\n" for b in self.boxes)

    def __len__(self):
        return len(self.boxes)


def solo_to_yolo(frame: SoloFrame, label_map: Optional[dict] = None) -> YoloLabelFile:
    label_map = LABEL_MAP if label_map is None else label_map
    frame.validate()
    W, H = frame.size
    boxes = []
    for b in frame.annotations:
        if b.label not in label_map:
            raise ConversionError(f"{frame.filename}: label {b.label!r} has no class id in the label map")
        (x, y), (w, h) = b.origin, b.dimension
        boxes.append(YoloBox(int(label_map[b.label]), (x + w / 2.0) / W, (y + h / 2.0) / H, w / W, h / H))
    return YoloLabelFile(boxes)


def write_yolo(path, labels: YoloLabelFile):
    Path(path).write_text(labels.to_text(), encoding="utf-8")


def parse_yolo(text: str, source: str = "<labels>", num_classes: int = len(CLASS_NAMES)) -> YoloLabelFile:
    boxes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        where = f"{source}:{lineno}"
        if len(parts) != 5:
            raise FormatError(f"{where}: expected 5 fields 'class cx cy w h', got {len(parts)}")
        try:
            cls = int(parts[0])
            cx, cy, w, h = (float(p) for p in parts[1:])
        except ValueError as exc:
            raise FormatError(f"{where}: {exc}") from exc
        if not 0 <= cls < num_classes:
            raise FormatError(f"{where}: class id {cls} outside 0..{num_classes - 1}")
        if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0 and 0.0 < w <= 1.0 and 0.0 < h <= 1.0):
            raise FormatError(f"{where}: box values must be normalized to [0, 1]")
        boxes.append(YoloBox(cls, cx, cy, w, h))
    return YoloLabelFile(boxes)


def read_yolo(path) -> YoloLabelFile:
    return parse_yolo(Path(path).read_text(encoding="utf-8"), str(path))


def convert_solo_dir(solo_dir, labels_dir, label_map: Optional[dict] = None) -> int:
    """Convert every ``*.json`` SOLO frame in ``solo_dir``; returns the file count."""
    solo_dir, labels_dir = Path(solo_dir), Path(labels_dir)
    if not solo_dir.is_dir():
        raise IngestionError(f"SOLO directory {solo_dir} does not exist")
    labels_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(solo_dir.glob("*.json"))
    for path in files:
        frame = read_solo(path)
        write_yolo(labels_dir / (Path(frame.filename).stem + ".txt"), solo_to_yolo(frame, label_map))
    return len(files)


# --------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class DatasetEntry:
    image: str
    label: Optional[str]
    domain: str
    split: Optional[str] = None


@dataclass
class DatasetManifest:
    """Image/label pairs; paths are relative to ``root`` unless absolute."""

    name: str
    domain: str
    root: str
    entries: list = field(default_factory=list)
    warnings: int = 0

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValidationError(f"unknown domain {self.domain!r}")

    def __len__(self):
        return len(self.entries)

    def resolve(self, path: Optional[str]) -> Optional[str]:
        if path is None:
            return None
        return os.path.abspath(os.path.join(self.root, path))

    def resolved(self) -> "DatasetManifest":
        """Copy whose entry paths are absolute."""
        entries = [replace(e, image=self.resolve(e.image), label=self.resolve(e.label)) for e in self.entries]
        return DatasetManifest(self.name, self.domain, os.path.abspath(self.root), entries, self.warnings)

    def subset(self, split: Optional[str]) -> list:
        return [e for e in self.entries if split is None or e.split == split]

    def counts(self) -> dict:
        out = {"total": len(self.entries)}
        for s in SPLITS:
            out[s] = sum(e.split == s for e in self.entries)
        out["unassigned"] = sum(e.split is None for e in self.entries)
        for d in ("real", "synthetic"):
            out[d] = sum(e.domain == d for e in self.entries)
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain,
            "root": self.root,
            "counts": self.counts(),
            "warnings": self.warnings,
            "entries": [
                {"image": e.image, "label": e.label, "domain": e.domain, "split": e.split} for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, base: Optional[str] = None) -> "DatasetManifest":
        try:
            root = data["root"]
            if base is not None and not os.path.isabs(root):
                root = os.path.normpath(os.path.join(base, root))
            entries = [DatasetEntry(e["image"], e["label"], e["domain"], e.get("split")) for e in data["entries"]]
            return cls(data["name"], data["domain"], root, entries, int(data.get("warnings", 0)))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed manifest: missing {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def write_manifest(path, manifest: DatasetManifest):
    Path(path).write_text(manifest.to_json(), encoding="utf-8")


def read_manifest(path) -> DatasetManifest:
    """Load a manifest; a relative ``root`` is taken relative to the file's directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise IngestionError(f"manifest {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    return DatasetManifest.from_dict(data, base=str(path.parent))


def ingest_real_dataset(root, name: str = "real") -> DatasetManifest:
    """Index a YOLO-layout directory (``images/`` plus ``labels/``).

    Images without a label file are kept with ``label=None`` (no objects) and
    counted in ``warnings``. Every label file is parsed, so a malformed line
    fails here with its file and line number.
    """
    root = Path(root)
    images_dir, labels_dir = root / "images", root / "labels"
    for d in (images_dir, labels_dir):
        if not d.is_dir():
            raise IngestionError(f"{root}: missing required directory {d.name}/")
    images = sorted(p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    entries, missing = [], 0
    for img in images:
        label = labels_dir / (img.stem + ".txt")
        if label.is_file():
            read_yolo(label)
            entries.append(DatasetEntry(f"images/{img.name}", f"labels/{label.name}", "real"))
        else:
            missing += 1
            log.warning("image %s has no label file; treating it as empty", img.name)
            entries.append(DatasetEntry(f"images/{img.name}", None, "real"))
    return DatasetManifest(name, "real", str(root), entries, missing)


def split_train_val(manifest: DatasetManifest, ratio: float = 0.8, seed: int = 0) -> DatasetManifest:
    """Seeded train/val assignment; ``floor(ratio * N)`` entries go to train.

    Entries already tagged ``test`` keep their tag and are not counted in N.
    """
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"split ratio must lie strictly between 0 and 1, got {ratio}")
    pool = [i for i, e in enumerate(manifest.entries) if e.split != "test"]
    n_train = int(math.floor(ratio * len(pool) + 1e-9))
    order = substream(seed, "split").permutation(len(pool))
    train = {pool[k] for k in order[:n_train]}
    entries = [
        e if e.split == "test" else replace(e, split="train" if i in train else "val")
        for i, e in enumerate(manifest.entries)
    ]
    return DatasetManifest(manifest.name, manifest.domain, manifest.root, entries, manifest.warnings)


def assemble_training_datasets(real: DatasetManifest, synthetic: DatasetManifest, synth_take: int,
                               seed: int = 0) -> tuple:
    """Dataset 1 holds the real entries; dataset 2 adds ``synth_take`` synthetic ones.

    The synthetic entries are a seeded draw without replacement. Both outputs
    use absolute paths, and dataset 2 lists exactly dataset 1's entries first.
    """
    if real.domain != "real" or synthetic.domain != "synthetic":
        raise ValidationError(f"expected a real and a synthetic manifest, got {real.domain!r} and {synthetic.domain!r}")
    synth_take = int(synth_take)
    if not 0 <= synth_take <= len(synthetic):
        raise ValidationError(f"synth_take {synth_take} outside 0..{len(synthetic)} (synthetic pool size)")
    real_abs = real.resolved()
    synth_abs = synthetic.resolved()
    pick = np.sort(substream(seed, "assemble").choice(len(synth_abs.entries), size=synth_take, replace=False))
    dataset1 = DatasetManifest("dataset1", "real", real_abs.root, list(real_abs.entries), real.warnings)
    chosen = [synth_abs.entries[int(i)] for i in pick]
    domain = "mixed" if chosen else "real"
    dataset2 = DatasetManifest("dataset2", domain, real_abs.root, list(real_abs.entries) + chosen, real.warnings)
    return dataset1, dataset2


def load_ground_truth(manifest: DatasetManifest, split: Optional[str] = None) -> dict:
    """``{image path: YoloLabelFile}`` for the selected entries (missing labels are empty)."""
    out = {}
    for e in manifest.subset(split):
        path = manifest.resolve(e.label)
        out[e.image] = read_yolo(path) if path is not None else YoloLabelFile()
    return out


def write_descriptor(out_dir, manifest: DatasetManifest, name: str = "data.txt") -> Path:
    """Write ``<split>.txt`` image lists plus a descriptor naming them.

    Descriptor layout (one ``key: value`` per line)::

        path: <dataset root>
        train: train.txt
        val: val.txt
        test: test.txt
        nc: 3
        names: [car, person, truck]
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split in SPLITS:
        lines = [manifest.resolve(e.image) for e in manifest.subset(split)]
        (out_dir / f"{split}.txt").write_text("".join(p + "\n" for p in lines), encoding="utf-8")
    text = (
        f"path: {os.path.abspath(manifest.root)}\n"
        + "".join(f"{s}: {s}.txt\n" for s in SPLITS)
        + f"nc: {len(CLASS_NAMES)}\n"
        + f"names: [{', '.join(CLASS_NAMES)}]\n"
    )
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def write_class_names(path, names: Sequence[str] = CLASS_NAMES):
    Path(path).write_text("".join(n + "\n" for n in names), encoding="utf-8")
