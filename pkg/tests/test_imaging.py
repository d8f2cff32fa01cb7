import numpy as np
import pytest

from genreclf.colormap import VIRIDIS_256
from genreclf.imaging import (
    load_lmel,
    load_png,
    render_image,
    save_lmel,
    save_png,
)

LUMA = np.array([0.2126, 0.7152, 0.0722])


class TestRenderImage:
    def test_output_shape_and_range(self):
        values = np.random.default_rng(0).uniform(-80, 0, (128, 130))
        img = render_image(values, "mel")
        assert img.pixels.shape == (224, 224, 3)
        assert img.pixels.min() >= 0.0 and img.pixels.max() <= 1.0
        assert img.kind == "mel"

    def test_constant_matrix_maps_to_midpoint(self):
        img = render_image(np.full((16, 20), 3.5))
        midpoint = (VIRIDIS_256[127] + VIRIDIS_256[128]) / 2  # value 0.5 interpolated
        np.testing.assert_allclose(img.pixels, np.broadcast_to(midpoint, (224, 224, 3)))

    def test_column_gradient_monotone_luminance(self):
        values = np.tile(np.linspace(0, 1, 60), (40, 1))  # increases along columns
        img = render_image(values)
        lum = img.pixels @ LUMA
        assert np.all(np.diff(lum, axis=1) >= -1e-12)

    def test_low_rows_render_at_bottom(self):
        values = np.zeros((32, 32))
        values[0] = 1.0  # lowest band bright
        img = render_image(values)
        lum = img.pixels @ LUMA
        assert lum[-1].mean() > lum[0].mean()

    def test_bit_identical_across_runs(self):
        values = np.random.default_rng(1).uniform(-40, 10, (128, 130))
        a = render_image(values).pixels
        b = render_image(values.copy()).pixels
        np.testing.assert_array_equal(a, b)

    def test_rejects_non_finite(self):
        values = np.zeros((4, 4))
        values[1, 1] = np.nan
        with pytest.raises(ValueError):
            render_image(values)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            render_image(np.zeros(16))


class TestPersistence:
    def test_png_roundtrip_quantization(self, tmp_path):
        img = render_image(np.random.default_rng(2).uniform(0, 1, (64, 64)))
        save_png(img, tmp_path / "x.png")
        back = load_png(tmp_path / "x.png")
        assert back.shape == (3, 224, 224)
        assert np.abs(back.transpose(1, 2, 0) - img.pixels).max() <= 0.5 / 255 + 1e-9

    def test_png_write_deterministic(self, tmp_path):
        img = render_image(np.random.default_rng(3).uniform(0, 1, (32, 32)))
        save_png(img, tmp_path / "a.png")
        save_png(img, tmp_path / "b.png")
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_lmel_roundtrip(self, tmp_path):
        values = np.random.default_rng(4).uniform(-100, 0, (128, 130)).astype(np.float32)
        save_lmel(values, tmp_path / "x.lmel")
        back = load_lmel(tmp_path / "x.lmel")
        np.testing.assert_array_equal(back.astype(np.float32), values)
        header = (tmp_path / "x.lmel").read_bytes()[:16]
        assert header[:4] == b"LMEL"
        assert int.from_bytes(header[4:8], "little") == 128
        assert int.from_bytes(header[8:12], "little") == 130

    def test_lmel_rejects_bad_magic(self, tmp_path):
        (tmp_path / "bad.lmel").write_bytes(b"NOPE" + b"\0" * 12)
        with pytest.raises(ValueError):
            load_lmel(tmp_path / "bad.lmel")


class TestColormapTable:
    def test_shape_and_range(self):
        assert VIRIDIS_256.shape == (256, 3)
        assert VIRIDIS_256.min() >= 0.0 and VIRIDIS_256.max() <= 1.0

    def test_luminance_strictly_increasing(self):
        lum = VIRIDIS_256 @ LUMA
        assert np.all(np.diff(lum) > 0)
