"""Command-line pipeline: augment -> features -> train / baselines -> predict,
plus catalog building and the recommender service.

Every subcommand logs its resolved configuration, is deterministic for a
fixed seed, and exits nonzero with a categorized error line on failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib

import numpy as np

from .audio import (
    DEFAULT_SAMPLE_RATE,
    AudioClip,
    AudioDecodeError,
    AudioWindow,
    WindowingError,
    decode_wav,
    resample,
    sample_windows,
    write_wav,
)
from .baselines import Standardizer, SvmConfig, featurize, knn_predict, svm_fit
from .dataset import (
    GENRES,
    Manifest,
    ManifestEntry,
    build_manifest,
    group_shuffle_split,
    naive_split,
    song_id_from_filename,
    split_leakage,
)
from .features import FeatureConfig, FeatureExtractor
from .imaging import save_png
from .metrics import append_results_row
from .models import build_model, load_weights, predict
from .service import ServiceConfig, center_window
from .trainer import TrainConfig, evaluate, export_curves, train


def _echo_config(name: str, ns: argparse.Namespace) -> None:
    resolved = {k: v for k, v in vars(ns).items() if k != "func"}
    print(f"[{name}] config: {json.dumps(resolved, sort_keys=True, default=str)}")


def _iter_genre_wavs(root):
    names = sorted(os.listdir(root))
    subdirs = [n for n in names if os.path.isdir(os.path.join(root, n))]
    if not subdirs:
        raise FileNotFoundError(f"{root}: no genre subdirectories found")
    for name in subdirs:
        if name not in GENRES:
            raise ValueError(f"unknown genre directory {name!r}")
        for fn in sorted(os.listdir(os.path.join(root, name))):
            if fn.lower().endswith(".wav"):
                yield name, os.path.join(root, name, fn)


def cmd_augment(ns) -> int:
    _echo_config("augment", ns)
    counts = dict.fromkeys(GENRES, 0)
    for genre, path in _iter_genre_wavs(ns.data_dir):
        clip = decode_wav(path)
        if clip.sample_rate != DEFAULT_SAMPLE_RATE:
            clip = resample(clip, DEFAULT_SAMPLE_RATE)
        # per-file seed keeps outputs independent of scan order
        seed = np.random.default_rng(
            [ns.seed, zlib.crc32(clip.source_id.encode())]).integers(2**31)
        windows = sample_windows(clip, 3.0, 5, rng_seed=int(seed))
        out_sub = os.path.join(ns.out_dir, genre)
        os.makedirs(out_sub, exist_ok=True)
        for i, w in enumerate(windows):
            out = os.path.join(out_sub, f"{clip.source_id}.win{i}.wav")
            write_wav(out, AudioClip(w.samples, w.sample_rate, w.source_id))
            counts[genre] += 1
    total = sum(counts.values())
    if total == 0:
        raise FileNotFoundError(f"{ns.data_dir}: no WAV files found")
    for genre, n in counts.items():
        if n:
            print(f"  {genre}: {n} windows")
    print(f"[augment] wrote {total} windows to {ns.out_dir}")
    return 0


def cmd_features(ns) -> int:
    _echo_config("features", ns)
    extractor = FeatureExtractor(FeatureConfig(kind=ns.repr))
    out_root = os.path.join(ns.out_dir, ns.repr)
    n = 0
    for genre, path in _iter_genre_wavs(ns.data_dir):
        clip = decode_wav(path)
        window = AudioWindow(clip.samples, clip.sample_rate, clip.source_id, 0)
        image = extractor.image(window)
        out_sub = os.path.join(out_root, genre)
        os.makedirs(out_sub, exist_ok=True)
        save_png(image, os.path.join(out_sub, clip.source_id + ".png"))
        n += 1
    if n == 0:
        raise FileNotFoundError(f"{ns.data_dir}: no window WAVs found")
    print(f"[features] rendered {n} {ns.repr} images to {out_root}")
    return 0


def _split_plan(manifest: Manifest, split: str, seed: int):
    if split == "grouped":
        plan = group_shuffle_split(manifest, 0.8, seed)
        leaked = split_leakage(manifest, plan)
        if leaked:
            raise AssertionError(f"grouped split leaked {len(leaked)} songs")
        return plan
    return naive_split(manifest, 0.8, seed)


def cmd_train(ns) -> int:
    _echo_config("train", ns)
    manifest = build_manifest(os.path.join(ns.data_dir, ns.repr))
    plan = _split_plan(manifest, ns.split, ns.seed)
    model = build_model(ns.arch, seed=ns.seed)
    config = TrainConfig(max_epochs=ns.epochs, patience=ns.patience,
                         batch_size=ns.batch_size, learning_rate=ns.lr,
                         seed=ns.seed)
    os.makedirs(ns.out_dir, exist_ok=True)
    report = train(model, manifest, plan, config, out_dir=ns.out_dir)
    export_curves(report, os.path.join(ns.out_dir, f"{ns.arch}_{ns.repr}_curves.csv"))
    metrics_report, cm, _ = evaluate(model, manifest, plan.test_indices, ns.batch_size)
    cm.save_csv(os.path.join(ns.out_dir, f"{ns.arch}_{ns.repr}_confusion.csv"), GENRES)
    metrics_report.save_json(os.path.join(ns.out_dir, f"{ns.arch}_{ns.repr}_metrics.json"))
    append_results_row(os.path.join(ns.out_dir, "results.csv"), ns.arch, ns.repr,
                       metrics_report)
    print(f"[train] {ns.arch}/{ns.repr}/{ns.split}: accuracy {metrics_report.accuracy:.4f} "
          f"(best epoch {report.best_epoch}, {report.epochs_run} run, "
          f"early stop: {report.stopped_early})")
    return 0


def cmd_baselines(ns) -> int:
    _echo_config("baselines", ns)
    extractors = {
        "stft": FeatureExtractor(FeatureConfig(kind="stft")),
        "mel": FeatureExtractor(FeatureConfig(kind="mel")),
    }
    windows, labels, song_ids = [], [], []
    for genre, path in _iter_genre_wavs(ns.data_dir):
        clip = decode_wav(path)
        windows.append(AudioWindow(clip.samples, clip.sample_rate, clip.source_id, 0))
        labels.append(GENRES.index(genre))
        song_ids.append(song_id_from_filename(path))
    if not windows:
        raise FileNotFoundError(f"{ns.data_dir}: no window WAVs found")
    labels = np.array(labels)

    # split machinery only needs labels and song ids
    manifest = Manifest([ManifestEntry("", int(l), s) for l, s in zip(labels, song_ids)])
    plan = group_shuffle_split(manifest, 0.8, ns.seed)
    if len(plan.test_indices) == 0:
        # fewer than 5 songs per genre: an 80/20 song holdout is impossible
        print("[baselines] warning: too few songs per genre for a grouped "
              "holdout; falling back to a naive window-level split")
        plan = naive_split(manifest, 0.8, ns.seed)

    table: dict[str, dict[str, float]] = {}
    for source in ("raw", "stft", "mel"):
        if source == "raw":
            feats = np.stack([featurize(w, "raw", ns.dim) for w in windows])
        else:
            feats = np.stack([featurize(extractors[source].matrix(w), source, ns.dim)
                              for w in windows])
        scaler = Standardizer().fit(feats[plan.train_indices])
        X_train = scaler.transform(feats[plan.train_indices])
        X_test = scaler.transform(feats[plan.test_indices])
        y_train, y_test = labels[plan.train_indices], labels[plan.test_indices]

        for k in ns.k:
            preds = np.array([knn_predict(X_train, y_train, q, k) for q in X_test])
            table.setdefault(f"knn_{k}", {})[source] = float((preds == y_test).mean())
        weights = svm_fit(X_train, y_train, SvmConfig())
        margins = X_test @ weights[:, :-1].T + weights[:, -1]
        table.setdefault("svm", {})[source] = float((margins.argmax(axis=1) == y_test).mean())

    os.makedirs(ns.out_dir, exist_ok=True)
    out = os.path.join(ns.out_dir, "baselines.csv")
    with open(out, "w") as f:
        f.write("method,raw,stft,mel\n")
        for method, row in table.items():
            f.write(f"{method},{row['raw']:.4f},{row['stft']:.4f},{row['mel']:.4f}\n")
            print(f"  {method}: raw {row['raw']:.3f}  stft {row['stft']:.3f}  mel {row['mel']:.3f}")
    print(f"[baselines] wrote {out}")
    return 0


def cmd_predict(ns) -> int:
    _echo_config("predict", ns)
    model = build_model(ns.arch)
    load_weights(model, ns.checkpoint)
    clip = decode_wav(ns.audio)
    if clip.sample_rate != DEFAULT_SAMPLE_RATE:
        clip = resample(clip, DEFAULT_SAMPLE_RATE)
    if clip.duration < 3.0:
        raise WindowingError("audio shorter than 3 seconds")
    extractor = FeatureExtractor(FeatureConfig(kind=ns.repr))

    if ns.average_windows and clip.duration < 15.0:
        print("[predict] clip shorter than 15 s; using the center window instead "
              "of 5-window averaging")
    if ns.average_windows and clip.duration >= 15.0:
        probs = np.zeros(len(GENRES))
        for w in sample_windows(clip, 3.0, 5, rng_seed=ns.seed):
            dist, _ = predict(model, extractor.image(w).pixels.transpose(2, 0, 1))
            probs += dist.probs
        probs /= 5.0
    else:
        window = center_window(clip)
        dist, _ = predict(model, extractor.image(window).pixels.transpose(2, 0, 1))
        probs = dist.probs

    top = int(np.argmax(probs))
    for genre, p in zip(GENRES, probs):
        print(f"  {genre:>10}: {p:.4f}")
    print(f"[predict] top genre: {GENRES[top]}")
    return 0


def cmd_build_catalog(ns) -> int:
    _echo_config("build-catalog", ns)
    from .recommend import build_catalog, save_catalog
    manifest = build_manifest(ns.data_dir)
    model = build_model(ns.arch)
    load_weights(model, ns.checkpoint)
    catalog = build_catalog(manifest, model, batch_size=ns.batch_size)
    save_catalog(catalog, ns.out)
    print(f"[build-catalog] wrote {len(catalog)} songs to {ns.out}")
    return 0


def cmd_serve(ns) -> int:
    _echo_config("serve", ns)
    from .service import run
    config = ServiceConfig(checkpoint_path=ns.checkpoint, catalog_path=ns.catalog,
                           arch=ns.arch, max_upload_bytes=ns.max_upload,
                           static_dir=ns.static_dir)
    run(config, host=ns.host, port=ns.port)
    return 0


def cmd_synth(ns) -> int:
    _echo_config("synth", ns)
    from .synthdata import build_synthetic_corpus
    paths = build_synthetic_corpus(ns.out_dir, ns.songs_per_genre, seed=ns.seed)
    print(f"[synth] wrote {len(paths)} songs to {ns.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genreclf",
                                     description="music genre classification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="cut 5 non-overlapping 3s windows per clip")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("features", help="render spectrogram images for windows")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--repr", choices=("stft", "mel"), default="mel")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train one architecture on rendered images")
    p.add_argument("--data-dir", required=True, help="features root (contains mel/ or stft/)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--arch", choices=("cnn", "bigru", "resnet18", "hybrid"), default="hybrid")
    p.add_argument("--repr", choices=("stft", "mel"), default="mel")
    p.add_argument("--split", choices=("grouped", "naive"), default="grouped")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("baselines", help="KNN and linear SVM over raw/stft/mel features")
    p.add_argument("--data-dir", required=True, help="augmented windows root")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--k", type=int, nargs="+", default=[10, 15, 20])
    p.add_argument("--dim", type=int, default=2048)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("predict", help="classify one audio file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--arch", choices=("cnn", "bigru", "resnet18", "hybrid"), default="hybrid")
    p.add_argument("--repr", choices=("stft", "mel"), default="mel")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--average-windows", action="store_true",
                   help="average over 5 windows instead of the center window")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("build-catalog", help="per-song genre distributions for the recommender")
    p.add_argument("--data-dir", required=True, help="rendered image root")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--arch", choices=("cnn", "bigru", "resnet18", "hybrid"), default="hybrid")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_catalog)

    p = sub.add_parser("serve", help="run the recommender HTTP service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--arch", choices=("cnn", "bigru", "resnet18", "hybrid"), default="hybrid")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-upload", type=int, default=16 * 1024 * 1024)
    p.add_argument("--static-dir", default="")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate the procedural mini-corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--songs-per-genre", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


_ERROR_CATEGORIES = (
    (AudioDecodeError, "audio"),
    (WindowingError, "windowing"),
    (FileNotFoundError, "missing-input"),
    (AssertionError, "invariant"),
    (ValueError, "invalid-input"),
    (OSError, "io"),
)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except Exception as exc:  # categorized nonzero exit for scripting
        for etype, category in _ERROR_CATEGORIES:
            if isinstance(exc, etype):
                print(f"error[{category}]: {exc}", file=sys.stderr)
                return 2
        print(f"error[internal]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
