import numpy as np
import pytest

from genreclf.audio import AudioWindow
from genreclf.dsp import (
    StftParams,
    hz_to_mel,
    log_compress,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    power_spectrum,
    stft,
)


def naive_stft(x, params: StftParams):
    """O(N^2) DFT of tapered frames; the independent oracle."""
    if params.window_kind == "hann":
        n = params.window_length
        w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    else:
        w = np.ones(params.window_length)
    count = params.n_frames(len(x))
    if params.center_pad:
        x = np.pad(x, params.fft_length // 2, mode="reflect")
    frames = []
    for i in range(count):
        seg = x[i * params.hop_length:i * params.hop_length + params.window_length] * w
        if params.window_length < params.fft_length:
            pad = params.fft_length - params.window_length
            seg = np.pad(seg, (pad // 2, pad - pad // 2))
        frames.append(seg)
    n_fft = params.fft_length
    k = np.arange(n_fft // 2 + 1)
    n = np.arange(n_fft)
    dft = np.exp(-2j * np.pi * k[:, None] * n[None, :] / n_fft)
    return np.stack([dft @ f for f in frames], axis=1)


def window_of(samples, rate=22050):
    return AudioWindow(np.asarray(samples, dtype=np.float64), rate, "w", 0)


class TestStft:
    def test_default_shape_on_3s_window(self):
        spec = stft(window_of(np.random.default_rng(0).uniform(-1, 1, 66150)))
        assert spec.bins.shape == (1025, 130)

    def test_zero_input_zero_output(self):
        spec = stft(window_of(np.zeros(66150)))
        assert np.all(spec.bins == 0)

    @pytest.mark.parametrize("kind", ["hann", "rectangular"])
    def test_matches_naive_dft(self, kind):
        rng = np.random.default_rng(4)
        x = rng.uniform(-1, 1, 4096)
        params = StftParams(window_length=512, hop_length=256, fft_length=512,
                            window_kind=kind, center_pad=False)
        got = stft(window_of(x), params).bins
        want = naive_stft(x, params)
        scale = np.abs(want).max()
        assert np.abs(got - want).max() / scale < 1e-9

    def test_bin_center_sine_peaks_at_bin(self):
        # frequency k*sr/fft -> energy concentrated at row k
        params = StftParams(window_length=1024, hop_length=512, fft_length=1024,
                            center_pad=False)
        sr, k = 22050, 100
        t = np.arange(8192) / sr
        x = np.sin(2 * np.pi * (k * sr / 1024) * t)
        mags = np.abs(stft(window_of(x), params).bins)
        assert np.all(mags.argmax(axis=0) == k)

    def test_uncentered_frame_count(self):
        params = StftParams(center_pad=False)
        spec = stft(window_of(np.ones(66150) * 0.1), params)
        assert spec.bins.shape[1] == 1 + (66150 - 2048) // 512

    def test_too_short_uncentered_raises(self):
        with pytest.raises(ValueError):
            stft(window_of(np.ones(100) * 0.1), StftParams(center_pad=False))

    def test_parseval_rectangular(self):
        # uncentered rectangular frames: full-spectrum energy is N * frame energy;
        # reconstruct the two-sided sum from the one-sided bins
        params = StftParams(window_length=512, hop_length=512, fft_length=512,
                            window_kind="rectangular", center_pad=False)
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, 4096)
        spec = stft(window_of(x), params).bins
        p = np.abs(spec) ** 2
        twosided = 2 * p[1:-1].sum(axis=0) + p[0] + p[-1]
        for i in range(spec.shape[1]):
            frame = x[i * 512:(i + 1) * 512]
            assert abs(twosided[i] - 512 * (frame ** 2).sum()) / (512 * (frame ** 2).sum()) < 0.02


class TestPowerSpectrum:
    def test_hand_value(self):
        spec = stft(window_of(np.zeros(66150)))
        spec.bins[:] = 0
        spec.bins[3, 5] = 3 + 4j
        p = power_spectrum(spec)
        assert p[3, 5] == pytest.approx(25.0)
        assert p.sum() == pytest.approx(25.0)

    def test_matches_conjugate_product(self):
        rng = np.random.default_rng(2)
        spec = stft(window_of(rng.uniform(-1, 1, 66150)))
        p = power_spectrum(spec)
        oracle = (spec.bins * np.conj(spec.bins)).real
        np.testing.assert_allclose(p, oracle, rtol=1e-12)
        assert np.all(p >= 0)


class TestMelScale:
    def test_zero(self):
        assert hz_to_mel(0.0) == 0.0

    def test_700(self):
        assert hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0), rel=1e-12)

    def test_nyquist_22050(self):
        expected = 2595.0 * np.log10(1.0 + 11025.0 / 700.0)
        assert hz_to_mel(11025.0) == pytest.approx(expected, rel=1e-12)

    def test_monotone(self):
        f = np.linspace(0, 20000, 5000)
        assert np.all(np.diff(hz_to_mel(f)) > 0)

    def test_inverse_identity(self):
        f = np.linspace(0, 20000, 2000)[1:]
        back = mel_to_hz(hz_to_mel(f))
        assert np.abs(back - f).max() / f.max() < 1e-9

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            hz_to_mel(-1.0)
        with pytest.raises(ValueError):
            mel_to_hz(-1.0)


class TestFilterbank:
    def test_default_shape_and_support(self):
        bank = mel_filterbank(128, 2048, 22050, 0.0, 11025.0)
        assert bank.weights.shape == (128, 1025)
        assert bank.band_edges.shape == (130,)
        assert np.all(bank.weights >= 0) and np.all(bank.weights <= 1)
        assert np.all(bank.weights.max(axis=1) > 0)

    def test_rows_unimodal(self):
        bank = mel_filterbank(64, 1024, 22050)
        for row in bank.weights:
            support = np.flatnonzero(row)
            peak = row.argmax()
            assert np.all(np.diff(row[support[0]:peak + 1]) >= 0)
            assert np.all(np.diff(row[peak:support[-1] + 1]) <= 0)

    def test_single_triangle(self):
        bank = mel_filterbank(1, 2048, 22050, 0.0, 11025.0)
        assert bank.weights.shape == (1, 1025)
        apex_hz = mel_to_hz(hz_to_mel(11025.0) / 2.0)
        bin_freqs = np.arange(1025) * 22050 / 2048
        assert abs(bin_freqs[bank.weights[0].argmax()] - apex_hz) < 22050 / 2048

    def test_flat_power_gives_row_sums(self):
        bank = mel_filterbank(32, 512, 22050)
        ones = np.ones((257, 4))
        mel = mel_spectrogram(ones, bank)
        np.testing.assert_allclose(mel.values[:, 0], bank.weights.sum(axis=1), rtol=1e-12)

    def test_interior_edges_have_unique_peak_filter(self):
        bank = mel_filterbank(16, 2048, 22050)
        edges = bank.band_edges
        for k in range(16):
            apex = edges[k + 1]
            # evaluate every triangle analytically at this interior edge
            lo, pk, hi = edges[:-2], edges[1:-1], edges[2:]
            vals = np.maximum(0, np.minimum((apex - lo) / (pk - lo),
                                            (hi - apex) / (hi - pk)))
            assert vals[k] == pytest.approx(1.0)
            assert np.sum(vals >= 1.0 - 1e-12) == 1

    def test_too_many_filters_rejected(self):
        with pytest.raises(ValueError, match="cover no FFT bin"):
            mel_filterbank(1000, 2048, 22050)

    def test_bad_range_rejected(self):
        with pytest.raises(ValueError):
            mel_filterbank(10, 2048, 22050, f_min=500, f_max=400)


class TestMelSpectrogram:
    def test_identity_bank(self):
        from genreclf.dsp import FilterbankMatrix
        p = np.random.default_rng(0).uniform(0, 2, (5, 7))
        bank = FilterbankMatrix(np.eye(5), np.zeros(7))
        np.testing.assert_array_equal(mel_spectrogram(p, bank).values, p)

    def test_zero_power(self):
        bank = mel_filterbank(16, 512, 22050)
        assert np.all(mel_spectrogram(np.zeros((257, 3)), bank).values == 0)

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(5)
        power = rng.uniform(0, 1, (257, 6))
        bank = mel_filterbank(16, 512, 22050)
        got = mel_spectrogram(power, bank).values
        M, K, T = 16, 257, 6
        want = np.zeros((M, T))
        for m in range(M):
            for t in range(T):
                acc = 0.0
                for k in range(K):
                    acc += bank.weights[m, k] * power[k, t]
                want[m, t] = acc
        assert np.abs(got - want).max() < 1e-10

    def test_shape_mismatch(self):
        bank = mel_filterbank(16, 512, 22050)
        with pytest.raises(ValueError):
            mel_spectrogram(np.zeros((100, 3)), bank)


class TestLogCompress:
    def make_mel(self, values):
        bank = mel_filterbank(values.shape[0], 512, 22050)
        from genreclf.dsp import MelSpectrogram
        return MelSpectrogram(values, values.shape[0], StftParams(), 22050)

    def test_db_values(self):
        mel = self.make_mel(np.array([[1.0, 0.0, 100.0]]))
        out = log_compress(mel, floor=1e-10)
        np.testing.assert_allclose(out.values, [[0.0, -100.0, 20.0]])

    def test_natural_log(self):
        mel = self.make_mel(np.array([[np.e, 0.0]]))
        out = log_compress(mel, floor=1e-10, natural=True)
        np.testing.assert_allclose(out.values, [[1.0, np.log(1e-10)]])

    def test_finite_everywhere(self):
        mel = self.make_mel(np.zeros((4, 9)))
        assert np.all(np.isfinite(log_compress(mel).values))

    def test_bad_floor(self):
        with pytest.raises(ValueError):
            log_compress(self.make_mel(np.ones((2, 2))), floor=0.0)
