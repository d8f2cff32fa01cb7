"""Procedurally generated mini-corpus for desk-scale experiments.

Each synthetic "genre" has its own carrier frequency and pulse rate, with
per-song detuning, phase, and noise, so spectrogram images are separable but
songs within a genre still differ. Files are written in the GTZAN layout
(<root>/<genre>/<genre>.NNNNN.wav) so the whole pipeline runs unchanged.
"""

from __future__ import annotations

import os

import numpy as np

from .audio import AudioClip, write_wav
from .dataset import GENRES

SR = 22050


def synth_song(genre: int, song: int, duration: float = 30.0,
               sample_rate: int = SR, seed: int = 0) -> AudioClip:
    """One synthetic song: pulsed two-harmonic tone plus noise floor."""
    rng = np.random.default_rng([seed, genre, song])
    base = 220.0 * (2.0 ** (genre * 0.42))     # distinct carrier per genre
    pulse_rate = 1.0 + 0.8 * genre             # distinct rhythm per genre
    detune = 1.0 + rng.uniform(-0.03, 0.03)
    f = base * detune

    t = np.arange(int(duration * sample_rate)) / sample_rate
    pulse_phase = rng.uniform(0, 1)
    env = 0.35 + 0.65 * (((t * pulse_rate + pulse_phase) % 1.0) < 0.5)
    x = 0.45 * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) * env
    x += 0.20 * np.sin(2 * np.pi * 2 * f * t + rng.uniform(0, 2 * np.pi)) * env
    x += rng.uniform(0.003, 0.01) * rng.standard_normal(len(t))
    x = np.clip(x, -1.0, 1.0)
    return AudioClip(x, sample_rate, source_id=f"{GENRES[genre]}.{song:05d}")


def build_synthetic_corpus(root, songs_per_genre: int = 5, duration: float = 30.0,
                           seed: int = 0) -> list[str]:
    """Write a GTZAN-layout WAV tree; returns the file paths."""
    paths = []
    for g, genre in enumerate(GENRES):
        os.makedirs(os.path.join(root, genre), exist_ok=True)
        for s in range(songs_per_genre):
            clip = synth_song(g, s, duration, seed=seed)
            path = os.path.join(root, genre, f"{clip.source_id}.wav")
            write_wav(path, clip)
            paths.append(path)
    return paths
