"""Window-to-image feature pipeline used by the CLI, the service, and tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioWindow
from .dsp import (
    FilterbankMatrix,
    StftParams,
    db_scale,
    log_compress,
    mel_filterbank,
    mel_spectrogram,
    power_spectrum,
    stft,
)
from .imaging import SpectroImage, render_image


@dataclass
class FeatureConfig:
    kind: str = "mel"  # "mel" or "stft"
    stft_params: StftParams = field(default_factory=StftParams)
    n_mels: int = 128
    f_min: float = 0.0
    f_max: float | None = None
    log_floor: float = 1e-10
    natural_log: bool = False


class FeatureExtractor:
    """Computes log-scaled spectrogram matrices and rendered images.

    The mel filterbank is built on first use and cached per sample rate;
    concurrent first calls may compute it twice, harmlessly (the result is
    identical and assignment is atomic). Everything else is pure.
    """

    def __init__(self, config: FeatureConfig | None = None):
        self.config = config or FeatureConfig()
        if self.config.kind not in ("mel", "stft"):
            raise ValueError(f"unknown feature kind {self.config.kind!r}")
        self._bank: FilterbankMatrix | None = None
        self._bank_rate: int | None = None

    def _bank_for(self, sample_rate: int) -> FilterbankMatrix:
        if self._bank is None or self._bank_rate != sample_rate:
            self._bank = mel_filterbank(
                self.config.n_mels, self.config.stft_params.fft_length,
                sample_rate, self.config.f_min, self.config.f_max,
            )
            self._bank_rate = sample_rate
        return self._bank

    def matrix(self, window: AudioWindow) -> np.ndarray:
        """Log-scaled spectrogram matrix (mel bands or FFT bins, by kind)."""
        cfg = self.config
        spec = stft(window, cfg.stft_params)
        power = power_spectrum(spec)
        if cfg.kind == "stft":
            if cfg.natural_log:
                return np.log(np.maximum(power, cfg.log_floor))
            return db_scale(power, cfg.log_floor)
        mel = mel_spectrogram(power, self._bank_for(window.sample_rate),
                              cfg.stft_params, window.sample_rate)
        return log_compress(mel, cfg.log_floor, natural=cfg.natural_log).values

    def image(self, window: AudioWindow) -> SpectroImage:
        return render_image(self.matrix(window), kind=self.config.kind)
