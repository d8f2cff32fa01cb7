"""Genre-distribution catalog and similarity ranking.

A catalog row is a song and the mean of the model's predicted distributions
over that song's windows; recommendations are the k catalog songs whose
distributions are most similar to a query distribution (cosine by default,
negative L2 distance selectable).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Manifest, load_image_batch
from .models import GenreDistribution, GenreModel, predict_batch


@dataclass
class CatalogEntry:
    song_id: str
    title: str
    distribution: GenreDistribution


@dataclass
class Recommendation:
    song_id: str
    title: str
    similarity: float


def _title_from_song_id(song_id: str) -> str:
    genre, _, number = song_id.partition(".")
    return f"{genre.capitalize()} #{number}" if number else song_id


def build_catalog(manifest: Manifest, model: GenreModel,
                  batch_size: int = 32) -> list[CatalogEntry]:
    """Predict every window and average distributions per song."""
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    indices = np.arange(len(manifest.entries))
    for start in range(0, len(indices), batch_size):
        chunk = indices[start:start + batch_size]
        images, _ = load_image_batch(manifest, chunk)
        probs = predict_batch(model, images)
        for i, row in zip(chunk, probs):
            sid = manifest.entries[i].song_id
            sums[sid] = sums.get(sid, 0) + row
            counts[sid] = counts.get(sid, 0) + 1
    return [
        CatalogEntry(sid, _title_from_song_id(sid),
                     GenreDistribution(sums[sid] / counts[sid]))
        for sid in sums
    ]


def save_catalog(catalog: list[CatalogEntry], path) -> None:
    payload = [
        {"song_id": e.song_id, "title": e.title,
         "distribution": e.distribution.probs.tolist()}
        for e in catalog
    ]
    with open(path, "w") as f:
        json.dump(payload, f)


def load_catalog(path) -> list[CatalogEntry]:
    with open(path) as f:
        payload = json.load(f)
    return [CatalogEntry(d["song_id"], d["title"],
                         GenreDistribution(np.array(d["distribution"])))
            for d in payload]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def recommend(query: GenreDistribution, catalog: list[CatalogEntry],
              k: int = 5, measure: str = "cosine") -> list[Recommendation]:
    """Top-k catalog entries by similarity, ties broken by song_id."""
    if not catalog:
        raise ValueError("catalog is empty")
    if measure == "cosine":
        score = lambda e: cosine_similarity(query.probs, e.distribution.probs)
    elif measure == "l2":
        score = lambda e: -float(np.linalg.norm(query.probs - e.distribution.probs))
    else:
        raise ValueError(f"unknown similarity measure {measure!r}")
    scored = sorted(((score(e), e) for e in catalog),
                    key=lambda se: (-se[0], se[1].song_id))
    return [Recommendation(e.song_id, e.title, s) for s, e in scored[:k]]
