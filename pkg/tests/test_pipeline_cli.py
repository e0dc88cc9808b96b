import json
from pathlib import Path

import pytest

from synthdrive.cli import main
from synthdrive.errors import ConfigError
from synthdrive.formats import DatasetEntry, DatasetManifest, read_manifest, read_yolo, write_manifest
from synthdrive.pipeline import PipelineConfig


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


def config(tmp_path, name="cfg.json", **scene):
    data = {
        "scene": {"preset": "mountain_lowland", "seed": 7, **scene},
        "capture": {"num_images": 4, "camera_seed": 3, "frames_per_scene": 2, "warmup_steps": 5,
                    "steps_between_frames": 5},
    }
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("gen")
    cfg = config(tmp, pedestrian_density=0.0, traffic_density=30.0)
    assert main(["gen-dataset", "--config", str(cfg), "--out", str(tmp / "a"), "--no-timestamp"]) == 0
    return tmp, cfg


def test_gen_dataset_layout(small_dataset):
    tmp, _ = small_dataset
    root = tmp / "a"
    assert len(list((root / "images").glob("*.ppm"))) == 4
    assert len(list((root / "labels").glob("*.txt"))) == 4
    assert len(list((root / "solo").glob("*.json"))) == 4
    assert (root / "classes.txt").read_text() == "car\nperson\ntruck\n"
    manifest = read_manifest(root / "manifest.json")
    assert len(manifest) == 4 and manifest.domain == "synthetic"
    assert all(Path(manifest.resolve(e.image)).is_file() for e in manifest.entries)


def test_gen_dataset_rerun_is_byte_identical(small_dataset, capsys):
    tmp, cfg = small_dataset
    code, summary = run(capsys, "gen-dataset", "--config", cfg, "--out", tmp / "b", "--no-timestamp", "--workers", 2)
    assert code == 0 and summary["images"] == 4 and "timestamp" not in summary
    assert tree_bytes(tmp / "a") == tree_bytes(tmp / "b")


def test_zero_pedestrian_run_has_no_person_labels(small_dataset):
    tmp, _ = small_dataset
    for path in (tmp / "a" / "labels").glob("*.txt"):
        assert all(b.class_id != 1 for b in read_yolo(path).boxes)


def test_seed_override_changes_output(small_dataset, capsys):
    tmp, cfg = small_dataset
    code, _ = run(capsys, "gen-dataset", "--config", cfg, "--out", tmp / "c", "--seed", 8, "--no-timestamp")
    assert code == 0
    assert tree_bytes(tmp / "a") != tree_bytes(tmp / "c")


def test_gen_dataset_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scene": {"seed": 1}, "capture": {"num_images": 0, "camera_seed": 1}}))
    assert run(capsys, "gen-dataset", "--config", bad, "--out", tmp_path / "o")[0] == 2
    assert run(capsys, "gen-dataset", "--config", tmp_path / "missing.json")[0] == 3
    (tmp_path / "junk.json").write_text("{")
    assert run(capsys, "gen-dataset", "--config", tmp_path / "junk.json")[0] == 2


def test_config_requires_explicit_seeds():
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"scene": {"preset": "mountain_lowland"}, "capture": {"num_images": 1, "camera_seed": 1}})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"scene": {"seed": 1}, "capture": {"num_images": 1}})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"scene": {"seed": 1, "preset": "city"}, "capture": {"num_images": 1, "camera_seed": 1}})


def test_config_cycles_list_values():
    cfg = PipelineConfig.from_dict({
        "scene": {"seed": 1, "preset": ["settlement_complex", "mountain_lowland"], "time_of_day": ["noon", "dusk"]},
        "capture": {"num_images": 40, "camera_seed": 1},
    })
    assert [cfg.scene_spec(k).preset for k in range(3)] == ["settlement_complex", "mountain_lowland",
                                                             "settlement_complex"]
    assert cfg.scene_spec(1).time_of_day == "dusk"
    assert cfg.scene_spec(0).seed != cfg.scene_spec(2).seed


def manifest_file(path, n, domain="real", root="/pool"):
    entries = [DatasetEntry(f"images/{domain}{k}.ppm", f"labels/{domain}{k}.txt", domain) for k in range(n)]
    write_manifest(path, DatasetManifest(domain, domain, root, entries))
    return path


def test_split_ten(tmp_path, capsys):
    m = manifest_file(tmp_path / "m.json", 10)
    code, summary = run(capsys, "split", "--manifest", m, "--ratio", 0.8, "--seed", 1, "--out", tmp_path / "s",
                        "--no-timestamp")
    assert code == 0 and (summary["train"], summary["val"]) == (8, 2)
    first = tree_bytes(tmp_path / "s")
    run(capsys, "split", "--manifest", m, "--ratio", 0.8, "--seed", 1, "--out", tmp_path / "s", "--no-timestamp")
    assert tree_bytes(tmp_path / "s") == first
    assert (tmp_path / "s" / "split" / "data.txt").is_file()


def test_mix_batch_count(tmp_path, capsys):
    real = manifest_file(tmp_path / "real.json", 4658)
    synth = manifest_file(tmp_path / "synth.json", 2139, "synthetic")
    code, summary = run(capsys, "mix", "--manifest", real, "--synthetic-manifest", synth, "--real", 5, "--synth", 3,
                        "--seed", 0, "--out", tmp_path / "batches.jsonl")
    assert code == 0 and summary["batches"] == 931 and summary["synthetic_wraps"] == 1
    assert len((tmp_path / "batches.jsonl").read_text().splitlines()) == 931


def test_assemble(tmp_path, capsys):
    real = manifest_file(tmp_path / "real.json", 20)
    synth = manifest_file(tmp_path / "synth.json", 30, "synthetic")
    code, summary = run(capsys, "assemble", "--real", real, "--synthetic", synth, "--synth-take", 12,
                        "--out", tmp_path / "sets")
    assert code == 0 and summary["dataset2"]["images"] == 32
    assert run(capsys, "assemble", "--real", real, "--synthetic", synth, "--synth-take", 31,
               "--out", tmp_path / "sets")[0] == 4


@pytest.mark.filterwarnings("ignore:classes")
def test_detect_then_eval_identity(small_dataset, capsys, tmp_path):
    root = small_dataset[0] / "a"
    code, det = run(capsys, "detect", "--manifest", root, "--out", tmp_path / "dets.jsonl", "--seed", 1)
    assert code == 0
    code, report = run(capsys, "eval", "--manifest", root, "--detections", tmp_path / "dets.jsonl",
                       "--out", tmp_path / "report.json", "--table", tmp_path / "table.txt")
    assert code == 0 and det["ground_truths"] > 0
    assert report["map"] == 1.0 and report["fn"] == 0 and report["fp"] == 0
    assert json.loads((tmp_path / "report.json").read_text())["tp"] == report["tp"]
    assert (tmp_path / "table.txt").read_text().startswith("System")


def test_convert_and_ingest(small_dataset, capsys, tmp_path):
    root = small_dataset[0] / "a"
    code, summary = run(capsys, "convert", "--solo", root / "solo", "--out", tmp_path / "labels")
    assert code == 0 and summary["converted"] == 4
    for p in (tmp_path / "labels").iterdir():
        assert p.read_bytes() == (root / "labels" / p.name).read_bytes()
    real = tmp_path / "real"
    (real / "images").mkdir(parents=True)
    (real / "labels").mkdir()
    (real / "images" / "x.jpg").write_bytes(b"")
    code, summary = run(capsys, "ingest", real)
    assert code == 0 and summary["unlabelled"] == 1
    assert run(capsys, "ingest", tmp_path / "nowhere")[0] == 3


def test_report(tmp_path, capsys):
    log = tmp_path / "train.csv"
    log.write_text("epoch,box_loss,cls_loss,dfl_loss\n1,1.7,1.2,1.4\n2,0.95,0.5,1.0\n")
    code, summary = run(capsys, "report", "--log", log)
    assert code == 0 and summary["series"]["box_loss"]["start"] == 1.7
    assert Path(summary["plot_data"]).is_file()
    assert "timestamp" in summary
    (tmp_path / "bad.csv").write_text("epoch,box_loss\n1,1\n")
    assert run(capsys, "report", "--log", tmp_path / "bad.csv")[0] == 4
