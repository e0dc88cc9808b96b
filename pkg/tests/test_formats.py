import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthdrive.errors import ConversionError, FormatError, IngestionError, ValidationError
from synthdrive.formats import (
    LABEL_MAP, DatasetEntry, DatasetManifest, SoloBox, SoloFrame, YoloBox, YoloLabelFile,
    assemble_training_datasets, convert_solo_dir, ingest_real_dataset, load_ground_truth, parse_yolo, read_manifest,
    read_solo, read_yolo, solo_json, solo_to_yolo, split_train_val, write_descriptor, write_manifest, write_solo,
    write_yolo,
)

GOLDEN = """{
  "sequence": 0,
  "step": 3,
  "capture": {
    "filename": "frame_0_000003.ppm",
    "dimension": [
      512,
      512
    ]
  },
  "annotations": [
    {
      "instanceId": 17,
      "labelName": "car",
      "origin": [
        10,
        20
      ],
      "dimension": [
        30,
        40
      ]
    }
  ]
}
"""


def frame(*boxes, size=(512, 512)):
    return SoloFrame(0, 3, "frame_0_000003.ppm", size, list(boxes))


def test_solo_golden_file(tmp_path):
    f = frame(SoloBox(17, "car", (10, 20), (30, 40)))
    write_solo(tmp_path / "f.json", f)
    assert (tmp_path / "f.json").read_text() == GOLDEN


def test_solo_empty_annotations():
    data = json.loads(solo_json(frame()))
    assert data["annotations"] == []


def test_solo_round_trip(tmp_path):
    f = frame(SoloBox(1, "person", (0, 0), (5, 9)), SoloBox(2, "truck", (500, 400), (12, 112)))
    write_solo(tmp_path / "f.json", f)
    assert read_solo(tmp_path / "f.json") == f


def test_solo_out_of_bounds_box_rejected():
    with pytest.raises(ValidationError):
        solo_json(frame(SoloBox(1, "car", (500, 0), (20, 10))))
    with pytest.raises(ValidationError):
        solo_json(frame(SoloBox(1, "car", (-1, 0), (2, 2))))


def test_solo_malformed_file(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(FormatError):
        read_solo(tmp_path / "bad.json")
    (tmp_path / "short.json").write_text('{"sequence": 0}')
    with pytest.raises(FormatError):
        read_solo(tmp_path / "short.json")


def test_yolo_full_image_box():
    labels = solo_to_yolo(frame(SoloBox(1, "car", (0, 0), (512, 512))))
    assert labels.to_text() == "0 0.500000 0.500000 1.000000 1.000000\n"


def test_yolo_centred_half_box():
    (box,) = solo_to_yolo(frame(SoloBox(1, "person", (128, 128), (256, 256)))).boxes
    assert (box.class_id, box.cx, box.cy, box.w, box.h) == (1, 0.5, 0.5, 0.5, 0.5)


def test_yolo_truck_class_id():
    assert LABEL_MAP == {"car": 0, "person": 1, "truck": 2}
    (box,) = solo_to_yolo(frame(SoloBox(1, "truck", (1, 1), (4, 4)))).boxes
    assert box.class_id == 2


def test_unknown_label_names_the_label():
    with pytest.raises(ConversionError, match="bicycle"):
        solo_to_yolo(frame(SoloBox(1, "bicycle", (1, 1), (4, 4))))


in_bounds_box = st.integers(1, 512).flatmap(
    lambda w: st.integers(1, 512).flatmap(
        lambda h: st.tuples(st.integers(0, 512 - w), st.integers(0, 512 - h), st.just(w), st.just(h))
    )
)


@given(st.lists(in_bounds_box, min_size=1, max_size=6))
def test_yolo_round_trip_within_half_pixel(boxes):
    f = frame(*[SoloBox(i, "car", (x, y), (w, h)) for i, (x, y, w, h) in enumerate(boxes)])
    parsed = parse_yolo(solo_to_yolo(f).to_text())
    for b, (x, y, w, h) in zip(parsed.boxes, boxes):
        for v in (b.cx, b.cy, b.w, b.h):
            assert 0.0 <= v <= 1.0
        px, py, pw, ph = b.to_pixels(512, 512)
        assert abs(px - x) <= 0.5 and abs(py - y) <= 0.5 and abs(pw - w) <= 0.5 and abs(ph - h) <= 0.5


def test_parse_yolo_reports_file_and_line():
    with pytest.raises(FormatError, match=r"a\.txt:2"):
        parse_yolo("0 0.5 0.5 0.1 0.1\n0 0.5 0.5 0.1\n", "a.txt")
    with pytest.raises(FormatError, match="class id"):
        parse_yolo("7 0.5 0.5 0.1 0.1\n")
    with pytest.raises(FormatError):
        parse_yolo("0 1.5 0.5 0.1 0.1\n")
    assert len(parse_yolo("\n0 0.5 0.5 0.1 0.1\n\n")) == 1


def test_convert_solo_dir(tmp_path):
    solo = tmp_path / "solo"
    solo.mkdir()
    for k in range(3):
        write_solo(solo / f"{k}.json", SoloFrame(0, k, f"frame_0_{k:06d}.ppm",
                                                 annotations=[SoloBox(1, "car", (0, 0), (512, 512))]))
    assert convert_solo_dir(solo, tmp_path / "labels") == 3
    assert read_yolo(tmp_path / "labels" / "frame_0_000001.txt").boxes == [YoloBox(0, 0.5, 0.5, 1.0, 1.0)]
    with pytest.raises(IngestionError):
        convert_solo_dir(tmp_path / "nope", tmp_path / "labels")


def make_real(root, n=3, unlabeled=(), bad=None):
    (root / "images").mkdir(parents=True)
    (root / "labels").mkdir()
    for k in range(n):
        (root / "images" / f"img{k}.jpg").write_bytes(b"")
        if k not in unlabeled:
            text = "0 0.5 0.5 0.2 0.2\n" if k != bad else "0 0.5 0.5 0.2\n"
            (root / "labels" / f"img{k}.txt").write_text(text)
    return root


def test_ingest_happy_path(tmp_path):
    m = ingest_real_dataset(make_real(tmp_path / "real"))
    assert len(m) == 3 and m.domain == "real" and m.warnings == 0
    assert all(e.domain == "real" and e.label is not None for e in m.entries)


def test_ingest_unlabeled_image_warns(tmp_path):
    m = ingest_real_dataset(make_real(tmp_path / "real", unlabeled=(1,)))
    assert m.warnings == 1
    assert m.entries[1].label is None
    gt = load_ground_truth(m)
    assert len(gt["images/img1.jpg"]) == 0 and len(gt["images/img0.jpg"]) == 1


def test_ingest_malformed_label_is_fatal(tmp_path):
    with pytest.raises(FormatError, match=r"img2\.txt:1"):
        ingest_real_dataset(make_real(tmp_path / "real", bad=2))


def test_ingest_missing_directory(tmp_path):
    (tmp_path / "images").mkdir()
    with pytest.raises(IngestionError):
        ingest_real_dataset(tmp_path)


def pool(n, domain="real", root="/data"):
    return DatasetManifest(domain, domain, root, [DatasetEntry(f"images/{k}.ppm", f"labels/{k}.txt", domain)
                                                   for k in range(n)])


def test_split_ten():
    c = split_train_val(pool(10), 0.8, seed=1).counts()
    assert (c["train"], c["val"]) == (8, 2)


def test_split_4658_images():
    c = split_train_val(pool(4658), 0.8, seed=1).counts()
    assert (c["train"], c["val"]) == (3726, 932)


@given(st.integers(1, 300), st.floats(0.05, 0.95), st.integers(0, 2 ** 32))
def test_split_partition_and_determinism(n, ratio, seed):
    a = split_train_val(pool(n), ratio, seed)
    b = split_train_val(pool(n), ratio, seed)
    assert a.entries == b.entries
    train = {e.image for e in a.subset("train")}
    val = {e.image for e in a.subset("val")}
    assert not train & val and train | val == {e.image for e in pool(n).entries}
    assert len(train) == int(ratio * n + 1e-9)


def test_split_keeps_test_entries_and_rejects_bad_ratio():
    m = pool(6)
    m.entries[0] = DatasetEntry("images/0.ppm", "labels/0.txt", "real", "test")
    out = split_train_val(m, 0.5, seed=2)
    assert out.entries[0].split == "test" and out.counts()["train"] == 2
    for bad in (0.0, 1.0):
        with pytest.raises(ValidationError):
            split_train_val(m, bad)


def test_assemble_4658_real_2139_synthetic():
    d1, d2 = assemble_training_datasets(pool(4658), pool(10000, "synthetic", "/synth"), 2139, seed=3)
    assert len(d1) == 4658 and len(d2) == 6797
    assert [e for e in d2.entries if e.domain == "real"] == d1.entries
    assert d2.counts()["synthetic"] == 2139
    assert all(e.image.startswith("/") for e in d2.entries)


def test_assemble_zero_take_and_errors():
    d1, d2 = assemble_training_datasets(pool(5), pool(4, "synthetic"), 0)
    assert d2.entries == d1.entries
    with pytest.raises(ValidationError):
        assemble_training_datasets(pool(5), pool(4, "synthetic"), 5)
    with pytest.raises(ValidationError):
        assemble_training_datasets(pool(5, "synthetic"), pool(4, "synthetic"), 1)


def test_assemble_is_seeded():
    a = assemble_training_datasets(pool(5), pool(50, "synthetic"), 10, seed=1)[1].entries
    b = assemble_training_datasets(pool(5), pool(50, "synthetic"), 10, seed=1)[1].entries
    c = assemble_training_datasets(pool(5), pool(50, "synthetic"), 10, seed=2)[1].entries
    assert a == b and a != c


def test_manifest_round_trip_with_relative_root(tmp_path):
    m = split_train_val(pool(4, root="."), 0.5, seed=0)
    (tmp_path / "ds").mkdir()
    write_manifest(tmp_path / "ds" / "manifest.json", m)
    again = read_manifest(tmp_path / "ds" / "manifest.json")
    assert again.entries == m.entries
    assert again.resolve("images/0.ppm") == str(tmp_path / "ds" / "images" / "0.ppm")
    with pytest.raises(IngestionError):
        read_manifest(tmp_path / "missing.json")


def test_descriptor(tmp_path):
    m = split_train_val(pool(10, root=str(tmp_path)), 0.8, seed=0)
    path = write_descriptor(tmp_path / "desc", m)
    lines = path.read_text().splitlines()
    assert lines[0] == f"path: {tmp_path}"
    assert lines[-2:] == ["nc: 3", "names: [car, person, truck]"]
    assert len((tmp_path / "desc" / "train.txt").read_text().splitlines()) == 8


def test_write_yolo_newline_terminated(tmp_path):
    write_yolo(tmp_path / "l.txt", YoloLabelFile([YoloBox(2, 0.25, 0.75, 0.1, 0.2)]))
    assert (tmp_path / "l.txt").read_text() == "2 0.250000 0.750000 0.100000 0.200000\n"
