"""Command-line entry point.

Every subcommand prints one JSON summary on stdout; progress goes to stderr.
Exit codes: 2 configuration error, 3 I/O or ingestion error, 4 validation error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import formats
from .errors import ConfigError, IngestionError, SynthDriveError, ValidationError
from .evaluation import (
    ConfModel, evaluate, ground_truth_from_labels, loss_curve_report, read_detections, stub_detector,
    write_detections,
)
from .pipeline import PipelineConfig, gen_dataset
from .sampler import REAL, SYNTHETIC, BgcConfig, make_epoch, write_batches

log = logging.getLogger("synthdrive")


def _cmd_gen_dataset(args) -> dict:
    if not args.config:
        raise ConfigError("gen-dataset needs --config")
    cfg = PipelineConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return gen_dataset(cfg, args.out, workers=args.workers)


def _cmd_convert(args) -> dict:
    out = args.out or str(Path(args.solo).parent / "labels")
    n = formats.convert_solo_dir(args.solo, out)
    return {"converted": n, "labels": out}


def _load_manifest(path_or_dir) -> formats.DatasetManifest:
    p = Path(path_or_dir)
    if p.is_dir() and not (p / "manifest.json").is_file():
        return formats.ingest_real_dataset(p)
    return formats.read_manifest(p / "manifest.json" if p.is_dir() else p)


def _write_manifest_and_descriptor(manifest, out: Path, stem: str):
    out.mkdir(parents=True, exist_ok=True)
    manifest = manifest.resolved()
    formats.write_manifest(out / f"{stem}.json", manifest)
    formats.write_descriptor(out / stem, manifest)
    return str(out / f"{stem}.json")


def _cmd_ingest(args) -> dict:
    manifest = formats.ingest_real_dataset(args.root, args.name)
    out = Path(args.out or Path(args.root) / "manifest.json")
    formats.write_manifest(out, manifest.resolved())
    return {"manifest": str(out), "images": len(manifest), "unlabelled": manifest.warnings}


def _cmd_split(args) -> dict:
    manifest = _load_manifest(args.manifest)
    seed = args.seed if args.seed is not None else 0
    split = formats.split_train_val(manifest, args.ratio, seed)
    out = Path(args.out) if args.out else Path(args.manifest if Path(args.manifest).is_dir() else Path(args.manifest).parent)
    path = _write_manifest_and_descriptor(split, out, "split")
    c = split.counts()
    return {"manifest": path, "train": c["train"], "val": c["val"], "test": c["test"]}


def _cmd_assemble(args) -> dict:
    real = _load_manifest(args.real)
    synthetic = _load_manifest(args.synthetic)
    seed = args.seed if args.seed is not None else 0
    d1, d2 = formats.assemble_training_datasets(real, synthetic, args.synth_take, seed)
    out = Path(args.out)
    p1 = _write_manifest_and_descriptor(d1, out, "dataset1")
    p2 = _write_manifest_and_descriptor(d2, out, "dataset2")
    return {"dataset1": {"manifest": p1, "images": len(d1)}, "dataset2": {"manifest": p2, "images": len(d2)}}


def _cmd_mix(args) -> dict:
    manifest = _load_manifest(args.manifest)
    entries = manifest.subset(args.split) if any(e.split for e in manifest.entries) else manifest.entries
    real = [manifest.resolve(e.image) for e in entries if e.domain == REAL]
    synth = [manifest.resolve(e.image) for e in entries if e.domain == SYNTHETIC]
    if args.synthetic_manifest:
        extra = _load_manifest(args.synthetic_manifest)
        pool = extra.subset(args.split) if any(e.split for e in extra.entries) else extra.entries
        synth += [extra.resolve(e.image) for e in pool]
    cfg = BgcConfig(args.real, args.synth, args.seed if args.seed is not None else 0)
    epoch = make_epoch(real, synth, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_batches(out, epoch)
    return {"batches": len(epoch), "real_pool": len(real), "synthetic_pool": len(synth),
            "synthetic_draws": epoch.synthetic_draws, "synthetic_wraps": epoch.wraps, "output": str(out)}


def _cmd_detect(args) -> dict:
    manifest = _load_manifest(args.manifest)
    gts = ground_truth_from_labels(formats.load_ground_truth(manifest, args.split))
    dets = stub_detector(gts, args.jitter_px, args.drop_rate, args.fp_rate, ConfModel(),
                         args.seed if args.seed is not None else 0)
    write_detections(args.out, dets)
    return {"detections": len(dets), "ground_truths": len(gts), "output": args.out}


def _cmd_eval(args) -> dict:
    manifest = _load_manifest(args.manifest)
    gts = ground_truth_from_labels(formats.load_ground_truth(manifest, args.split))
    dets = read_detections(args.detections)
    report = evaluate(dets, gts, formats.CLASS_NAMES)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    if args.table:
        Path(args.table).write_text(report.table(args.system), encoding="utf-8")
    sys.stderr.write(report.table(args.system))
    return report.to_dict()


def _cmd_report(args) -> dict:
    plot = args.out or str(Path(args.log).with_suffix(".dat"))
    report = loss_curve_report(args.log, plot)
    return dict(report.to_dict(), plot_data=plot)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON")
    common.add_argument("--seed", type=int, help="seed override")
    common.add_argument("--out", help="output path")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the JSON summary")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="synthdrive", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", parents=[common], help="generate a labelled synthetic dataset")
    p.add_argument("--workers", type=int, default=1, help="scene-level worker processes")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("convert", parents=[common], help="SOLO frame JSON to YOLO labels")
    p.add_argument("--solo", required=True, help="directory of SOLO frame files")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("ingest", parents=[common], help="index a YOLO-layout real dataset")
    p.add_argument("root")
    p.add_argument("--name", default="real")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", parents=[common], help="seeded train/val split")
    p.add_argument("--manifest", required=True, help="manifest file or dataset directory")
    p.add_argument("--ratio", type=float, default=0.8)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("assemble", parents=[common], help="build training datasets 1 and 2")
    p.add_argument("--real", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--synth-take", type=int, required=True)
    p.set_defaults(func=_cmd_assemble)

    p = sub.add_parser("mix", parents=[common], help="fixed-ratio real/synthetic batches as JSON lines")
    p.add_argument("--manifest", required=True, help="manifest holding the real (and optionally synthetic) pool")
    p.add_argument("--synthetic-manifest", help="extra manifest for the synthetic pool")
    p.add_argument("--real", type=int, default=5, help="real images per batch")
    p.add_argument("--synth", type=int, default=3, help="synthetic images per batch")
    p.add_argument("--split", default="train", help="split to draw from when the manifest is split")
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("detect", parents=[common], help="stub detector over ground-truth labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--jitter-px", type=float, default=0.0)
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", parents=[common], help="detection metrics against a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--table", help="also write the plain-text table here")
    p.add_argument("--system", default="detector", help="row name in the table")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", parents=[common], help="loss curve summary and plot data")
    p.add_argument("--log", required=True, help="CSV with epoch, box_loss, cls_loss, dfl_loss")
    p.set_defaults(func=_cmd_report)
    return parser


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, SynthDriveError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return IngestionError.exit_code
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = args.func(args)
    except (SynthDriveError, OSError) as exc:
        kind = {2: "configuration", 3: "I/O", 4: "validation"}.get(exit_code(exc), "error")
        sys.stderr.write(f"synthdrive {args.command}: {kind} error: {exc}\n")
        return exit_code(exc)
    out = {"command": args.command, "status": "ok", **summary}
    if not args.no_timestamp:
        out["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    sys.stdout.write(json.dumps(out, sort_keys=False) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
