import struct

import numpy as np
import pytest

from genreclf.audio import (
    AudioClip,
    EmptyAudioError,
    UnsupportedWavError,
    WindowingError,
    decode_wav,
    resample,
    sample_windows,
    write_wav,
)


def wav_bytes(frames: bytes, channels=1, rate=22050, bits=16, fmt_code=1) -> bytes:
    block = channels * bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(frames), b"WAVE",
        b"fmt ", 16, fmt_code, channels, rate, rate * block, block, bits,
        b"data", len(frames),
    )
    return header + frames


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_bytes(payload)
    return p


class TestDecode:
    def test_int16_scaling(self, tmp_path):
        frames = struct.pack("<3h", 0, 32767, -32768)
        clip = decode_wav(write(tmp_path, "a.wav", wav_bytes(frames)))
        assert clip.sample_rate == 22050
        np.testing.assert_allclose(clip.samples, [0.0, 32767 / 32768, -1.0])

    def test_stereo_mean(self, tmp_path):
        frames = struct.pack("<4h", 32767, 0, 32767, 0)  # L=~1.0, R=0.0
        clip = decode_wav(write(tmp_path, "s.wav", wav_bytes(frames, channels=2)))
        np.testing.assert_allclose(clip.samples, [32767 / 65536, 32767 / 65536])

    def test_empty_data_chunk(self, tmp_path):
        with pytest.raises(EmptyAudioError):
            decode_wav(write(tmp_path, "e.wav", wav_bytes(b"")))

    def test_int8_offset_binary(self, tmp_path):
        frames = bytes([128, 255, 0])
        clip = decode_wav(write(tmp_path, "b8.wav", wav_bytes(frames, bits=8)))
        np.testing.assert_allclose(clip.samples, [0.0, 127 / 128, -1.0])

    def test_int24(self, tmp_path):
        vals = [0, 2**23 - 1, -(2**23)]
        frames = b"".join(v.to_bytes(3, "little", signed=True) for v in vals)
        clip = decode_wav(write(tmp_path, "b24.wav", wav_bytes(frames, bits=24)))
        np.testing.assert_allclose(clip.samples, [0.0, (2**23 - 1) / 2**23, -1.0])

    def test_float32(self, tmp_path):
        frames = struct.pack("<3f", 0.5, -0.25, 2.0)  # out-of-range clamps
        clip = decode_wav(write(tmp_path, "f.wav", wav_bytes(frames, bits=32, fmt_code=3)))
        np.testing.assert_allclose(clip.samples, [0.5, -0.25, 1.0])

    def test_unsupported_encoding(self, tmp_path):
        frames = struct.pack("<3h", 1, 2, 3)
        with pytest.raises(UnsupportedWavError):
            decode_wav(write(tmp_path, "u.wav", wav_bytes(frames, fmt_code=7)))

    def test_not_riff(self, tmp_path):
        with pytest.raises(UnsupportedWavError):
            decode_wav(write(tmp_path, "x.wav", b"OggS" + b"\0" * 100))

    def test_unreadable_reported_distinctly(self, tmp_path):
        with pytest.raises(OSError):
            decode_wav(tmp_path / "missing.wav")

    def test_source_id_from_filename(self, tmp_path):
        frames = struct.pack("<2h", 0, 0)
        clip = decode_wav(write(tmp_path, "blues.00042.wav", wav_bytes(frames)))
        assert clip.source_id == "blues.00042"

    def test_roundtrip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(3)
        clip = AudioClip(rng.uniform(-1, 1, 5000), 22050, "rt")
        write_wav(tmp_path / "rt.wav", clip, bits=16)
        back = decode_wav(tmp_path / "rt.wav")
        assert np.abs(back.samples - clip.samples).max() <= 1 / 32768


class TestResample:
    def test_identity_rate(self):
        clip = AudioClip(np.linspace(-1, 1, 1000), 22050, "id")
        out = resample(clip, 22050)
        np.testing.assert_array_equal(out.samples, clip.samples)

    def test_sine_peak_preserved(self):
        # 440 Hz tone, 1 s at 44100 -> 22050; FFT bin resolution is 1 Hz
        t = np.arange(44100) / 44100
        clip = AudioClip(0.5 * np.sin(2 * np.pi * 440 * t), 44100, "sine")
        out = resample(clip, 22050)
        assert len(out.samples) == 22050
        peak = np.abs(np.fft.rfft(out.samples)).argmax()
        assert abs(peak - 440) <= 1

    def test_duration_preserved(self):
        clip = AudioClip(np.random.default_rng(0).uniform(-0.5, 0.5, 8000), 8000, "d")
        out = resample(clip, 22050)
        assert abs(len(out.samples) - 22050) <= 1

    @pytest.mark.parametrize("freq", [100, 440, 1000, 2500])
    def test_tone_rms_within_5_percent(self, freq):
        t = np.arange(44100) / 44100
        clip = AudioClip(0.4 * np.sin(2 * np.pi * freq * t), 44100, "rms")
        out = resample(clip, 22050)
        # ignore kernel-width edge effects
        core = out.samples[64:-64]
        src_rms = np.sqrt((clip.samples ** 2).mean())
        out_rms = np.sqrt((core ** 2).mean())
        assert abs(out_rms - src_rms) / src_rms < 0.05

    def test_rejects_bad_rate(self):
        clip = AudioClip(np.zeros(10) + 0.1, 8000, "z")
        with pytest.raises(ValueError):
            resample(clip, 0)


class TestSampleWindows:
    def make_clip(self, seconds, rate=22050):
        rng = np.random.default_rng(11)
        return AudioClip(rng.uniform(-1, 1, int(seconds * rate)), rate, "clip")

    @staticmethod
    def disjoint(windows, length):
        spans = sorted((w.offset, w.offset + length) for w in windows)
        return all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))

    def test_five_windows_from_30s(self):
        windows = sample_windows(self.make_clip(30), 3.0, 5, rng_seed=7)
        assert len(windows) == 5
        assert all(len(w.samples) == 66150 for w in windows)
        assert self.disjoint(windows, 66150)

    def test_tight_packing_back_to_back(self):
        windows = sample_windows(self.make_clip(15), 3.0, 5, rng_seed=1)
        offsets = sorted(w.offset for w in windows)
        assert offsets == [i * 66150 for i in range(5)]

    def test_too_short_raises(self):
        with pytest.raises(WindowingError):
            sample_windows(self.make_clip(10), 3.0, 5, rng_seed=0)

    def test_seed_reproducible_bitwise(self):
        clip = self.make_clip(30)
        a = sample_windows(clip, 3.0, 5, rng_seed=99)
        b = sample_windows(clip, 3.0, 5, rng_seed=99)
        for wa, wb in zip(a, b):
            assert wa.offset == wb.offset
            np.testing.assert_array_equal(wa.samples, wb.samples)

    def test_disjoint_for_many_seeds(self):
        clip = self.make_clip(20)
        for seed in range(50):
            windows = sample_windows(clip, 3.0, 5, rng_seed=seed)
            assert self.disjoint(windows, 66150), f"overlap at seed {seed}"

    def test_windows_match_parent_content(self):
        clip = self.make_clip(30)
        for w in sample_windows(clip, 3.0, 5, rng_seed=5):
            np.testing.assert_array_equal(
                w.samples, clip.samples[w.offset:w.offset + 66150])
