"""Manifest construction, leakage-safe splits, and batch iteration.

Songs are the grouping unit: the five 3-second windows cut from one song share
a song_id, and the grouped split keeps all of them on one side so test scores
measure generalization to unseen songs rather than unseen seconds.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .imaging import load_png

GENRES = ("blues", "classical", "country", "disco", "hiphop",
          "jazz", "metal", "pop", "reggae", "rock")


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    genre_label: int
    song_id: str


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    genres: tuple[str, ...] = GENRES

    def __len__(self):
        return len(self.entries)

    def song_ids(self) -> list[str]:
        seen = dict.fromkeys(e.song_id for e in self.entries)
        return list(seen)

    def save(self, path) -> None:
        with open(path, "w") as f:
            for e in self.entries:
                f.write(f"{e.image_path}\t{e.genre_label}\t{e.song_id}\n")

    @classmethod
    def load(cls, path) -> "Manifest":
        entries = []
        with open(path) as f:
            for line in f:
                img, label, song = line.rstrip("\n").split("\t")
                entries.append(ManifestEntry(img, int(label), song))
        return cls(entries)


@dataclass
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    grouped: bool
    ratio: float

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(f"seed\t{self.seed}\tgrouped\t{int(self.grouped)}\tratio\t{self.ratio}\n")
            f.write("train\t" + ",".join(map(str, self.train_indices.tolist())) + "\n")
            f.write("test\t" + ",".join(map(str, self.test_indices.tolist())) + "\n")

    @classmethod
    def load(cls, path) -> "SplitPlan":
        with open(path) as f:
            meta = f.readline().rstrip("\n").split("\t")
            train = f.readline().rstrip("\n").split("\t")[1]
            test = f.readline().rstrip("\n").split("\t")[1]
        return cls(
            np.array([int(i) for i in train.split(",") if i], dtype=np.int64),
            np.array([int(i) for i in test.split(",") if i], dtype=np.int64),
            seed=int(meta[1]), grouped=bool(int(meta[3])), ratio=float(meta[5]),
        )


def song_id_from_filename(filename: str) -> str:
    """GTZAN convention: blues.00000.win3.png -> blues.00000."""
    stem = os.path.basename(filename)
    parts = stem.split(".")
    if len(parts) < 2 or not parts[1].isdigit():
        raise ValueError(f"cannot derive song id from filename {filename!r}")
    return f"{parts[0]}.{parts[1]}"


def build_manifest(root, extensions: tuple[str, ...] = (".png",)) -> Manifest:
    """Scan a genre-per-subdirectory tree of rendered images.

    Every subdirectory must be one of the ten GTZAN genres; filenames must
    follow the genre.NNNNN.* convention so augmented windows of one song map
    to a single song_id.
    """
    label_of = {g: i for i, g in enumerate(GENRES)}
    entries = []
    for name in sorted(os.listdir(root)):
        sub = os.path.join(root, name)
        if not os.path.isdir(sub):
            continue
        if name not in label_of:
            raise ValueError(f"unknown genre directory {name!r} (expected one of {GENRES})")
        for fn in sorted(os.listdir(sub)):
            if not fn.lower().endswith(extensions):
                continue
            entries.append(ManifestEntry(
                os.path.join(sub, fn), label_of[name], song_id_from_filename(fn)))
    return Manifest(entries)


def group_shuffle_split(manifest: Manifest, ratio: float = 0.8, seed: int = 42) -> SplitPlan:
    """Song-level split, stratified by genre.

    Within each genre the songs are shuffled with the seeded generator and the
    first ceil(ratio * n_songs) go to train; all windows of a song land on the
    same side, so train/test share no song_id.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")

    song_label: dict[str, int] = {}
    song_entries: dict[str, list[int]] = {}
    for i, e in enumerate(manifest.entries):
        song_label.setdefault(e.song_id, e.genre_label)
        song_entries.setdefault(e.song_id, []).append(i)
    if len(song_entries) < 2:
        raise ValueError("grouped split needs at least 2 songs")

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in range(len(manifest.genres)):
        songs = [s for s in song_entries if song_label[s] == label]
        if not songs:
            continue
        order = rng.permutation(len(songs))
        n_train = math.ceil(ratio * len(songs))
        for rank, j in enumerate(order):
            side = train_idx if rank < n_train else test_idx
            side.extend(song_entries[songs[j]])
    return SplitPlan(np.sort(np.array(train_idx, dtype=np.int64)),
                     np.sort(np.array(test_idx, dtype=np.int64)),
                     seed=seed, grouped=True, ratio=ratio)


def naive_split(manifest: Manifest, ratio: float = 0.8, seed: int = 42) -> SplitPlan:
    """Entry-level shuffle and split; ignores song grouping.

    Kept only to reproduce the leakage effect of splitting augmented windows
    independently; use group_shuffle_split for real evaluation.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(manifest.entries))
    n_train = math.ceil(ratio * len(manifest.entries))
    return SplitPlan(np.sort(order[:n_train]).astype(np.int64),
                     np.sort(order[n_train:]).astype(np.int64),
                     seed=seed, grouped=False, ratio=ratio)


def split_leakage(manifest: Manifest, plan: SplitPlan) -> set[str]:
    """Song ids that appear on both sides of a split."""
    train = {manifest.entries[i].song_id for i in plan.train_indices}
    test = {manifest.entries[i].song_id for i in plan.test_indices}
    return train & test


@dataclass
class ArrayManifest:
    """In-memory stand-in for a Manifest (estimator fit on arrays)."""

    images: np.ndarray  # (N, 3, H, W) float in [0, 1]
    labels: np.ndarray  # (N,) ints
    song_ids: list[str] | None = None
    genres: tuple[str, ...] = GENRES

    def __post_init__(self):
        if self.song_ids is None:
            self.song_ids = [f"sample.{i:05d}" for i in range(len(self.labels))]
        self.entries = [ManifestEntry("", int(l), s)
                        for l, s in zip(self.labels, self.song_ids)]

    def __len__(self):
        return len(self.entries)


def load_image_batch(manifest, indices) -> tuple[np.ndarray, np.ndarray]:
    """Load entries as (images (B,3,224,224) in [0,1], labels (B,))."""
    indices = np.asarray(indices)
    if isinstance(manifest, ArrayManifest):
        return (manifest.images[indices].astype(np.float32),
                manifest.labels[indices].astype(np.int64))
    images = np.stack([load_png(manifest.entries[i].image_path) for i in indices])
    labels = np.array([manifest.entries[i].genre_label for i in indices], dtype=np.int64)
    return images.astype(np.float32), labels


def batch_iter(manifest: Manifest, indices: np.ndarray, batch_size: int,
               shuffle_seed: int | None = None):
    """Yield (image batch, label batch) covering every index exactly once.

    Order is shuffled with the seeded generator when shuffle_seed is given;
    the final short batch is kept.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    indices = np.asarray(indices)
    if shuffle_seed is not None:
        indices = indices[np.random.default_rng(shuffle_seed).permutation(len(indices))]
    for start in range(0, len(indices), batch_size):
        yield load_image_batch(manifest, indices[start:start + batch_size])
