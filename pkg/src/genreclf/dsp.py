"""Short-time Fourier transform, mel filterbank, and log compression.

Default analysis parameters: 2048-sample Hann window, hop 512, 2048-point
FFT, 128 mel bands over 0 Hz .. Nyquist at 22050 Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioWindow


@dataclass(frozen=True)
class StftParams:
    window_length: int = 2048
    hop_length: int = 512
    fft_length: int = 2048
    window_kind: str = "hann"  # "hann" or "rectangular"
    center_pad: bool = True

    def __post_init__(self):
        if not (0 < self.hop_length <= self.window_length <= self.fft_length):
            raise ValueError(
                f"need 0 < hop ({self.hop_length}) <= window ({self.window_length})"
                f" <= fft ({self.fft_length})"
            )
        if self.window_kind not in ("hann", "rectangular"):
            raise ValueError(f"unknown window kind {self.window_kind!r}")

    @property
    def n_bins(self) -> int:
        return self.fft_length // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        if self.center_pad:
            return 1 + n_samples // self.hop_length
        return 1 + (n_samples - self.window_length) // self.hop_length


@dataclass
class ComplexSpectrogram:
    bins: np.ndarray  # complex, (fft_length//2 + 1, n_frames)
    params: StftParams
    sample_rate: int


@dataclass
class FilterbankMatrix:
    weights: np.ndarray     # (n_mels, fft_length//2 + 1), entries in [0, 1]
    band_edges: np.ndarray  # (n_mels + 2,) hertz


@dataclass
class MelSpectrogram:
    values: np.ndarray  # (n_mels, n_frames), nonnegative
    n_mels: int
    params: StftParams
    sample_rate: int


@dataclass
class LogMelSpectrogram:
    values: np.ndarray  # (n_mels, n_frames)
    n_mels: int
    params: StftParams
    sample_rate: int


def _taper(params: StftParams) -> np.ndarray:
    n = params.window_length
    if params.window_kind == "hann":
        # periodic Hann, the usual STFT analysis convention
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    else:
        w = np.ones(n)
    if n < params.fft_length:
        pad = params.fft_length - n
        w = np.pad(w, (pad // 2, pad - pad // 2))
    return w


def stft(window: AudioWindow, params: StftParams = StftParams()) -> ComplexSpectrogram:
    """Windowed FFT frames of a mono signal.

    With center padding the signal is reflect-padded by fft_length//2 so frame
    i is centered on sample i*hop and n_frames = 1 + floor(N/hop); without it,
    frames tile from sample 0 and n_frames = 1 + floor((N - window)/hop).
    """
    x = np.asarray(window.samples, dtype=np.float64)
    if params.center_pad:
        x = np.pad(x, params.fft_length // 2, mode="reflect")
    elif len(x) < params.window_length:
        raise ValueError(
            f"signal of {len(x)} samples is shorter than one analysis frame "
            f"({params.window_length}) and center_pad is off"
        )
    n_frames = params.n_frames(len(window.samples))
    taper = _taper(params)
    frame_len = len(taper)

    starts = np.arange(n_frames) * params.hop_length
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[starts]
    spec = np.fft.rfft(frames * taper, n=params.fft_length, axis=1)
    return ComplexSpectrogram(spec.T.copy(), params, window.sample_rate)


def power_spectrum(spec: ComplexSpectrogram) -> np.ndarray:
    """Elementwise squared magnitude |x|^2."""
    return (spec.bins.real ** 2 + spec.bins.imag ** 2)


def hz_to_mel(f):
    """m = 2595 * log10(1 + f/700)."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be nonnegative")
    return 2595.0 * np.log10(1.0 + f / 700.0)


def mel_to_hz(m):
    """Inverse of hz_to_mel."""
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("mel value must be nonnegative")
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = 128, fft_length: int = 2048,
                   sample_rate: int = 22050, f_min: float = 0.0,
                   f_max: float | None = None) -> FilterbankMatrix:
    """Triangular filters with apexes equally spaced on the mel axis.

    Row k rises over (edge_k, edge_{k+1}) and falls over (edge_{k+1},
    edge_{k+2}), evaluated at FFT bin center frequencies. Rows are not
    area-normalized, so entries lie in [0, 1].
    """
    if f_max is None:
        f_max = sample_rate / 2.0
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    if not (0 <= f_min < f_max <= sample_rate / 2.0):
        raise ValueError(f"need 0 <= f_min < f_max <= Nyquist, got [{f_min}, {f_max}]")

    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    bin_freqs = np.arange(fft_length // 2 + 1) * sample_rate / fft_length

    lower = edges[:-2, None]
    peak = edges[1:-1, None]
    upper = edges[2:, None]
    rising = (bin_freqs[None, :] - lower) / (peak - lower)
    falling = (upper - bin_freqs[None, :]) / (upper - peak)
    weights = np.maximum(0.0, np.minimum(rising, falling))

    dead = np.flatnonzero(weights.max(axis=1) <= 0.0)
    if dead.size:
        raise ValueError(
            f"{dead.size} mel filters (first: row {dead[0]}) cover no FFT bin; "
            f"n_mels={n_mels} is too large for fft_length={fft_length}"
        )
    return FilterbankMatrix(weights, edges)


def mel_spectrogram(power: np.ndarray, bank: FilterbankMatrix,
                    params: StftParams = StftParams(),
                    sample_rate: int = 22050) -> MelSpectrogram:
    """Per-frame product of the filterbank with the power spectrum."""
    if bank.weights.shape[1] != power.shape[0]:
        raise ValueError(
            f"filterbank expects {bank.weights.shape[1]} bins, power has {power.shape[0]}"
        )
    values = bank.weights @ power
    return MelSpectrogram(values, bank.weights.shape[0], params, sample_rate)


def db_scale(values: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """10*log10(max(v, floor)); finite everywhere for floor > 0."""
    if floor <= 0:
        raise ValueError("floor must be positive")
    return 10.0 * np.log10(np.maximum(values, floor))


def log_compress(mel: MelSpectrogram, floor: float = 1e-10,
                 natural: bool = False) -> LogMelSpectrogram:
    """Log compression of a mel spectrogram, decibel convention by default."""
    if natural:
        if floor <= 0:
            raise ValueError("floor must be positive")
        values = np.log(np.maximum(mel.values, floor))
    else:
        values = db_scale(mel.values, floor)
    return LogMelSpectrogram(values, mel.n_mels, mel.params, mel.sample_rate)
