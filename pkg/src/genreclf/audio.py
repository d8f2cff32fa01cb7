"""WAV decoding, resampling, and non-overlapping window sampling.

All functions are pure given their inputs (and seed); clips are mono float64
arrays with amplitudes in [-1, 1].
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

DEFAULT_SAMPLE_RATE = 22050
WINDOW_SECONDS = 3.0
WINDOWS_PER_CLIP = 5


class AudioDecodeError(Exception):
    """Base class for WAV ingestion failures."""


class UnsupportedWavError(AudioDecodeError):
    """File is not a PCM/float WAV this decoder understands."""


class EmptyAudioError(AudioDecodeError):
    """WAV file contains no audio frames."""


class WindowingError(ValueError):
    """Clip cannot host the requested disjoint windows."""


@dataclass
class AudioClip:
    """Mono sample sequence at a fixed rate, amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise EmptyAudioError("clip has no samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("clip contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class AudioWindow:
    """Fixed-length slice of a parent clip (offset in parent samples)."""

    samples: np.ndarray
    sample_rate: int
    source_id: str
    offset: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)


# --- WAV container ---------------------------------------------------------

_PCM = 1
_IEEE_FLOAT = 3
_EXTENSIBLE = 0xFFFE


def _find_chunks(data: bytes) -> dict[bytes, tuple[int, int]]:
    """Map chunk id -> (payload offset, payload size) for a RIFF body."""
    chunks = {}
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        chunks.setdefault(cid, (pos + 8, size))
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    return chunks


def decode_wav(path) -> AudioClip:
    """Decode a PCM (8/16/24-bit int or 32-bit float) WAV file to a mono clip.

    Stereo files are averaged channel-wise. Amplitudes are scaled to [-1, 1]
    per the standard PCM conventions (e.g. int16 / 32768) and clamped; the
    original sample rate is preserved.

    Raises OSError for unreadable files, UnsupportedWavError for containers or
    encodings outside the supported set, and EmptyAudioError for zero-length
    audio.
    """
    with open(path, "rb") as f:
        data = f.read()
    source_id = os.path.splitext(os.path.basename(str(path)))[0]
    return decode_wav_bytes(data, source_id=source_id, label=str(path))


def decode_wav_bytes(data: bytes, source_id: str = "upload",
                     label: str = "<bytes>") -> AudioClip:
    """decode_wav on an in-memory WAV payload (uploads)."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedWavError(f"{label}: not a RIFF/WAVE file")
    path = label
    chunks = _find_chunks(data)
    if b"fmt " not in chunks or b"data" not in chunks:
        raise UnsupportedWavError(f"{path}: missing fmt or data chunk")

    fmt_off, fmt_size = chunks[b"fmt "]
    if fmt_size < 16:
        raise UnsupportedWavError(f"{path}: truncated fmt chunk")
    fmt_code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, fmt_off)
    if fmt_code == _EXTENSIBLE and fmt_size >= 40:
        # SubFormat GUID starts with the effective format code.
        (fmt_code,) = struct.unpack_from("<H", data, fmt_off + 24)
    if channels not in (1, 2):
        raise UnsupportedWavError(f"{path}: {channels} channels (expected 1 or 2)")

    off, size = chunks[b"data"]
    raw = data[off:off + size]
    if len(raw) == 0:
        raise EmptyAudioError(f"{path}: empty data chunk")

    if fmt_code == _PCM and bits == 16:
        x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif fmt_code == _PCM and bits == 8:
        # 8-bit WAV is unsigned with midpoint 128.
        x = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif fmt_code == _PCM and bits == 24:
        b = np.frombuffer(raw, dtype=np.uint8)
        b = b[: len(b) - len(b) % 3].reshape(-1, 3).astype(np.int64)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v -= (v & 0x800000) << 1  # sign-extend
        x = v.astype(np.float64) / 8388608.0
    elif fmt_code == _IEEE_FLOAT and bits == 32:
        x = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavError(f"{path}: unsupported encoding (format {fmt_code}, {bits}-bit)")

    if channels == 2:
        x = x[: len(x) - len(x) % 2].reshape(-1, 2).mean(axis=1)
    if x.size == 0:
        raise EmptyAudioError(f"{path}: empty data chunk")
    if not np.all(np.isfinite(x)):
        raise UnsupportedWavError(f"{path}: non-finite samples in float data")
    x = np.clip(x, -1.0, 1.0)
    return AudioClip(x, int(rate), source_id=source_id)


def write_wav(path, clip: AudioClip, bits: int = 16) -> None:
    """Write a mono clip as PCM WAV (16-bit int or 32-bit float)."""
    if bits == 16:
        payload = np.clip(np.rint(clip.samples * 32768.0), -32768, 32767).astype("<i2").tobytes()
        fmt_code, block = _PCM, 2
    elif bits == 32:
        payload = clip.samples.astype("<f4").tobytes()
        fmt_code, block = _IEEE_FLOAT, 4
    else:
        raise ValueError(f"unsupported bit depth {bits}")
    rate = clip.sample_rate
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, fmt_code, 1, rate, rate * block, block, bits,
        b"data", len(payload),
    )
    with open(path, "wb") as f:
        f.write(header + payload)


# --- Resampling ------------------------------------------------------------

_SINC_TAPS = 64
_KAISER_BETA = 8.6


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited resampling via a 64-tap Kaiser-windowed sinc kernel.

    Identity when rates already match. Duration is preserved to within one
    sample period; when downsampling, the kernel cutoff is lowered to the
    target Nyquist to avoid aliasing.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip

    x = clip.samples
    ratio = target_rate / clip.sample_rate
    n_out = int(round(len(x) * ratio))
    scale = min(ratio, 1.0)  # anti-aliasing cutoff for downsampling

    half = _SINC_TAPS // 2
    centers = np.arange(n_out) / ratio
    base = np.floor(centers).astype(np.int64)
    frac = centers - base

    # taps k - half + 1 .. k + half around each center
    offsets = np.arange(-half + 1, half + 1)
    idx = base[:, None] + offsets[None, :]
    t = offsets[None, :] - frac[:, None]

    window = np.i0(_KAISER_BETA * np.sqrt(np.maximum(0.0, 1.0 - (t / half) ** 2))) / np.i0(_KAISER_BETA)
    kernel = scale * np.sinc(scale * t) * window
    kernel /= kernel.sum(axis=1, keepdims=True)  # exact DC preservation

    padded = np.pad(x, (half, half))
    y = np.sum(padded[idx + half] * kernel, axis=1)
    return AudioClip(np.clip(y, -1.0, 1.0), target_rate, source_id=clip.source_id)


# --- Window sampling -------------------------------------------------------

def sample_windows(clip: AudioClip, window_seconds: float = WINDOW_SECONDS,
                   count: int = WINDOWS_PER_CLIP, rng_seed: int = 0) -> list[AudioWindow]:
    """Draw `count` pairwise non-overlapping windows at seeded random offsets.

    Offsets are placed by distributing the slack (clip length minus total
    window length) between the windows: `count` draws from the slack budget
    are sorted, which yields disjoint intervals without any rejection loop.
    """
    length = int(round(window_seconds * clip.sample_rate))
    total = count * length
    if len(clip.samples) < total:
        raise WindowingError(
            f"clip {clip.source_id!r} has {len(clip.samples)} samples; "
            f"{count} windows of {length} need {total}"
        )
    slack = len(clip.samples) - total
    rng = np.random.default_rng(rng_seed)
    cuts = np.sort(rng.integers(0, slack + 1, size=count))
    offsets = cuts + np.arange(count) * length
    return [
        AudioWindow(clip.samples[o:o + length].copy(), clip.sample_rate,
                    source_id=clip.source_id, offset=int(o))
        for o in offsets
    ]
