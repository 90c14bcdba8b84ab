"""Command surface wiring the pipeline stages together.

Subcommands: ingest, extract, train, predict, diarize, report, augment.
Primary outputs are written atomically (temp file + rename) and are
byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from collections import Counter

import numpy as np

from serpent import augment as aug
from serpent import dataset as ds
from serpent import diarization as dia
from serpent import metrics as mx
from serpent.audio_io import AudioClip, crop, decode_wav, encode_wav, resample
from serpent.config import CONFIG_ENV_VAR, apply_overrides, load_config
from serpent.dsp import extract_features
from serpent.errors import SerpentError
from serpent.nn.checkpoint import load_checkpoint, restore_model, save_checkpoint
from serpent.nn.model import train as train_model

VARIANT_TAGS = ("original", "noise", "pitch")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_clip(path: str, sample_rate_hz: int) -> AudioClip:
    with open(path, "rb") as fh:
        return resample(decode_wav(fh.read()), sample_rate_hz)


def cmd_ingest(cfg, args) -> int:
    if not cfg.corpus_roots and not cfg.movieclips_manifest:
        print("error: no corpus roots configured", file=sys.stderr)
        return 1
    entries = ds.ingest(cfg.corpus_roots, cfg.movieclips_manifest)
    if not entries:
        print("error: no audio files found under the configured roots", file=sys.stderr)
        return 1
    manifest_path = os.path.join(cfg.out_dir, "manifest.csv")
    os.makedirs(cfg.out_dir, exist_ok=True)
    ds.write_manifest(entries, manifest_path)

    counts = Counter(e.label for e in entries)
    lines = ["emotion,count"]
    peak = max(counts.values())
    print(f"ingested {len(entries)} clips -> {manifest_path}")
    for label in ds.EmotionLabel:
        n = counts.get(label, 0)
        bar = "#" * max(1, round(40 * n / peak)) if n else ""
        print(f"  {label.label_name:>8} {n:>6} {bar}")
        lines.append(f"{label.label_name},{n}")
    _atomic_write(os.path.join(cfg.out_dir, "emotion_counts.csv"), "\n".join(lines) + "\n")
    return 0


def _feature_rows(cfg, entries):
    """Yield (row_id, label, vector) triples, three per decodable clip."""
    failures = []
    for index, entry in enumerate(entries):
        try:
            clip = _load_clip(entry.path, cfg.sample_rate_hz)
            cropped = crop(clip, cfg.crop_offset_s, cfg.crop_duration_s, cfg.pad_to_duration)
            variants = aug.augment_set(cropped, cfg.augment, stream_id=index)
            for tag, variant in zip(VARIANT_TAGS, variants):
                row_id = entry.path if tag == "original" else f"{entry.path}#{tag}"
                vec = extract_features(variant, cfg.frame, cfg.n_mels, cfg.n_mfcc)
                yield row_id, entry.label, vec
        except (SerpentError, OSError) as exc:
            failures.append(f"{entry.path}: {exc}")
            print(f"warning: skipping {entry.path}: {exc}", file=sys.stderr)
    if failures and len(failures) > 0.01 * len(entries):
        raise SerpentError(
            f"{len(failures)} of {len(entries)} clips failed to process (> 1%)"
        )


def cmd_extract(cfg, args) -> int:
    manifest_path = args.manifest or os.path.join(cfg.out_dir, "manifest.csv")
    entries = ds.read_manifest(manifest_path)
    if not entries:
        print("error: manifest holds no rows", file=sys.stderr)
        return 1
    header = "path,label," + ",".join(f"f{i}" for i in range(2 + cfg.n_mfcc))
    lines = [header]
    for row_id, label, vec in _feature_rows(cfg, entries):
        values = ",".join(f"{v:.9g}" for v in vec)
        lines.append(f"{row_id},{label.label_name},{values}")
    out_path = os.path.join(cfg.out_dir, "features.csv")
    _atomic_write(out_path, "\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} feature rows -> {out_path}")
    return 0


def _read_features_csv(path: str):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["path", "label"]:
        raise SerpentError("features CSV must start with header 'path,label,f0,...'")
    ids = [r[0] for r in rows[1:]]
    labels = [ds.EmotionLabel.from_name(r[1]) for r in rows[1:]]
    matrix = np.array([[float(v) for v in r[2:]] for r in rows[1:]])
    return ids, labels, matrix


def _split_rows(cfg, ids):
    if not cfg.split.split_by_clip:
        return ds.split(len(ids), cfg.split.test_fraction, cfg.split.seed, cfg.split.shuffle)
    # split whole clips so a clip's variants cannot straddle the boundary
    bases = [row_id.split("#")[0] for row_id in ids]
    unique = sorted(set(bases))
    clip_split = ds.split(len(unique), cfg.split.test_fraction, cfg.split.seed, cfg.split.shuffle)
    test_bases = {unique[i] for i in clip_split.test_indices}
    train_rows = [i for i, b in enumerate(bases) if b not in test_bases]
    test_rows = [i for i, b in enumerate(bases) if b in test_bases]
    return ds.SplitResult(train_rows, test_rows)


def cmd_train(cfg, args) -> int:
    features_path = args.features or os.path.join(cfg.out_dir, "features.csv")
    ids, labels, matrix = _read_features_csv(features_path)
    result = _split_rows(cfg, ids)
    train_idx, test_idx = result.train_indices, result.test_indices

    standardized, mean, std = ds.standardize(matrix[train_idx], matrix)
    onehot = ds.labels_to_onehot(labels)
    checkpoint, history = train_model(
        standardized[train_idx],
        onehot[train_idx],
        cfg.model,
        test_features=standardized[test_idx],
        test_onehot=onehot[test_idx],
        standardization=(mean, std),
        log=print,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    ckpt_path = os.path.join(cfg.out_dir, "checkpoint.json")
    save_checkpoint(checkpoint, ckpt_path)

    hist_lines = ["epoch,train_loss,train_acc,test_loss,test_acc"]
    for e in range(len(history.train_loss)):
        hist_lines.append(
            f"{e + 1},{history.train_loss[e]:.9g},{history.train_acc[e]:.9g},"
            f"{history.test_loss[e]:.9g},{history.test_acc[e]:.9g}"
        )
    _atomic_write(os.path.join(cfg.out_dir, "history.csv"), "\n".join(hist_lines) + "\n")

    model = restore_model(checkpoint)
    probs = model.predict_proba(standardized[test_idx])
    y_pred = probs.argmax(axis=1)
    y_true = [int(labels[i]) for i in test_idx]
    cm = mx.confusion_matrix(y_true, y_pred.tolist())
    report = mx.precision_recall_f1(cm)
    text = mx.render_report(report)
    _atomic_write(os.path.join(cfg.out_dir, "report.txt"), text)
    _atomic_write(os.path.join(cfg.out_dir, "report.csv"), mx.report_to_csv(report))
    _atomic_write(os.path.join(cfg.out_dir, "confusion.csv"), mx.confusion_to_csv(cm))
    print(text, end="")
    print(f"checkpoint -> {ckpt_path}")
    return 0


def _predict_window(cfg, clip: AudioClip) -> AudioClip:
    # fall back to offset 0 when the clip is too short for the pipeline offset
    offset = cfg.crop_offset_s if clip.duration_seconds > cfg.crop_offset_s + 0.1 else 0.0
    return crop(clip, offset, cfg.crop_duration_s, pad_to_duration=True)


def _predict_one(cfg, model, checkpoint, clip: AudioClip) -> dict:
    vec = extract_features(_predict_window(cfg, clip), cfg.frame, cfg.n_mels, cfg.n_mfcc)
    x = (vec - checkpoint.feature_mean) / checkpoint.feature_std
    probs = model.predict_proba(x[None, :])[0]
    return {
        "label": ds.EMOTIONS[int(probs.argmax())],
        "probabilities": {name: float(p) for name, p in zip(ds.EMOTIONS, probs)},
    }


def cmd_predict(cfg, args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    model = restore_model(checkpoint)
    clip = _load_clip(args.wav, cfg.sample_rate_hz)
    result = {"file": args.wav}
    if args.diarize:
        segments = dia.diarize(clip, num_speakers=args.num_speakers, threshold=args.threshold)
        file_id = os.path.splitext(os.path.basename(args.wav))[0]
        rttm_path = args.rttm_out or os.path.join(cfg.out_dir, f"{file_id}.rttm")
        _atomic_write(rttm_path, dia.write_rttm(file_id, segments))
        result["rttm"] = rttm_path
        result["segments"] = []
        rate = clip.sample_rate_hz
        for seg in segments:
            piece = AudioClip(
                clip.samples[int(round(seg.start_s * rate)) : int(round(seg.end_s * rate))],
                rate,
            )
            entry = {"start": seg.start_s, "end": seg.end_s, "speaker": seg.speaker}
            entry.update(_predict_one(cfg, model, checkpoint, piece))
            result["segments"].append(entry)
    else:
        result.update(_predict_one(cfg, model, checkpoint, clip))
    text = json.dumps(result, indent=2)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    return 0


def cmd_diarize(cfg, args) -> int:
    clip = _load_clip(args.wav, cfg.sample_rate_hz)
    segments = dia.diarize(clip, num_speakers=args.num_speakers, threshold=args.threshold)
    file_id = os.path.splitext(os.path.basename(args.wav))[0]
    rttm_path = args.rttm_out or os.path.join(cfg.out_dir, f"{file_id}.rttm")
    _atomic_write(rttm_path, dia.write_rttm(file_id, segments))
    print(f"{len(segments)} segments -> {rttm_path}")
    return 0


def cmd_report(cfg, args) -> int:
    if args.predictions_csv:
        with open(args.predictions_csv, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["true", "pred"]:
            print("error: predictions CSV must start with header 'true,pred'", file=sys.stderr)
            return 1
        cm = mx.confusion_matrix([r[0] for r in rows[1:]], [r[1] for r in rows[1:]])
    else:
        with open(args.confusion_csv, newline="") as fh:
            rows = list(csv.reader(fh))
        labels = tuple(rows[0][1:])
        counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int64)
        cm = mx.ConfusionMatrix(counts, labels)
    report = mx.precision_recall_f1(cm)
    text = mx.render_report(report)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _atomic_write(os.path.join(cfg.out_dir, "report.txt"), text)
    _atomic_write(os.path.join(cfg.out_dir, "report.csv"), mx.report_to_csv(report))
    print(text, end="")
    return 0


def cmd_augment(cfg, args) -> int:
    for index, wav_path in enumerate(args.wavs):
        clip = _load_clip(wav_path, cfg.sample_rate_hz)
        variants = aug.augment_set(clip, cfg.augment, stream_id=index)
        stem, _ = os.path.splitext(wav_path)
        for tag, variant in zip(VARIANT_TAGS[1:], variants[1:]):
            out_path = f"{stem}.{tag}.wav"
            if args.out_dir:
                out_path = os.path.join(args.out_dir, os.path.basename(out_path))
                os.makedirs(args.out_dir, exist_ok=True)
            with open(out_path, "wb") as fh:
                fh.write(encode_wav(variant))
            print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serpent",
        description="Speech emotion recognition and speaker diarization pipeline",
    )
    parser.add_argument(
        "--config",
        default=None,
        help=f"config file path (default: ${CONFIG_ENV_VAR})",
    )
    parser.add_argument("--out-dir", default=None, help="output directory override")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="scan corpora into a manifest with emotion counts")

    p = sub.add_parser("extract", help="manifest -> augmented 22-dim feature CSV")
    p.add_argument("--manifest", default=None, help="manifest CSV (default: out/manifest.csv)")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("train", help="split, standardize, train, and evaluate")
    p.add_argument("--features", default=None, help="features CSV (default: out/features.csv)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--split-by-clip", action="store_true", help="split whole clips, not rows")

    p = sub.add_parser("predict", help="emotion probabilities for a WAV file")
    p.add_argument("checkpoint")
    p.add_argument("wav")
    p.add_argument("--diarize", action="store_true", help="predict per speaker segment")
    p.add_argument("--num-speakers", type=int, default=None)
    p.add_argument("--threshold", type=float, default=0.35)
    p.add_argument("--rttm-out", default=None)
    p.add_argument("--out", default=None, help="also write the JSON result here")

    p = sub.add_parser("diarize", help="who-spoke-when as an RTTM file")
    p.add_argument("wav")
    p.add_argument("--num-speakers", type=int, default=None)
    p.add_argument("--threshold", type=float, default=0.35)
    p.add_argument("--rttm-out", default=None)

    p = sub.add_parser("report", help="render a classification report")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--predictions-csv", default=None, help="CSV with header true,pred")
    group.add_argument("--confusion-csv", default=None, help="confusion matrix CSV")

    p = sub.add_parser("augment", help="write .noise.wav/.pitch.wav variants")
    p.add_argument("wavs", nargs="+")
    p.add_argument("--seed", type=int, default=None)

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "train": cmd_train,
    "predict": cmd_predict,
    "diarize": cmd_diarize,
    "report": cmd_report,
    "augment": cmd_augment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args)
        if getattr(args, "split_by_clip", False):
            from dataclasses import replace

            cfg = replace(cfg, split=replace(cfg.split, split_by_clip=True))
        return _COMMANDS[args.command](cfg, args)
    except (SerpentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
