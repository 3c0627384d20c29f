import numpy as np
import pytest

from flarebench import pngio
from flarebench.errors import ParameterError


class TestRoundTrips:
    @pytest.mark.parametrize("bits,tol", [(8, 0.5 / 255), (16, 0.5 / 65535)])
    def test_color_round_trip(self, tmp_path, rng, bits, tol):
        img = rng.random((9, 7, 3)).astype(np.float32)
        path = tmp_path / "img.png"
        pngio.save_image(path, img, bits=bits)
        back = pngio.load_image(path)
        assert back.shape == img.shape
        assert float(np.abs(back - img).max()) <= tol + 1e-9

    def test_grayscale_round_trip(self, tmp_path, rng):
        img = rng.random((6, 8)).astype(np.float32)
        path = tmp_path / "gray.png"
        pngio.save_image(path, img, bits=16)
        back = pngio.load_image(path)
        assert back.shape == (6, 8)

    def test_channel_order_preserved(self, tmp_path):
        img = np.zeros((1, 1, 3), dtype=np.float32)
        img[0, 0] = (1.0, 0.5, 0.0)  # distinctive R/G/B
        path = tmp_path / "rgb.png"
        pngio.save_image(path, img, bits=8)
        back = pngio.load_image(path)
        assert back[0, 0, 0] == 1.0
        assert back[0, 0, 2] == 0.0

    def test_quantization_clamps(self, tmp_path):
        img = np.array([[[1.8, -0.3, 0.5]]], dtype=np.float32)
        path = tmp_path / "clip.png"
        pngio.save_image(path, img, bits=8)
        back = pngio.load_image(path)
        assert back[0, 0, 0] == 1.0
        assert back[0, 0, 1] == 0.0

    def test_half_away_from_zero_rounding(self, tmp_path):
        # 0.5/255 scales to exactly 0.5 codes; must round up, not to even
        img = np.full((2, 2), 0.5 / 255, dtype=np.float64)
        path = tmp_path / "round.png"
        pngio.save_image(path, img, bits=8)
        back = pngio.load_image(path)
        assert back.min() == np.float32(1.0) / np.float32(255.0)  # code 1, not 0

    def test_16bit_precision_beats_8bit(self, tmp_path, rng):
        img = rng.random((16, 16, 3)).astype(np.float32)
        p8 = tmp_path / "a.png"
        p16 = tmp_path / "b.png"
        pngio.save_image(p8, img, bits=8)
        pngio.save_image(p16, img, bits=16)
        err8 = float(np.abs(pngio.load_image(p8) - img).max())
        err16 = float(np.abs(pngio.load_image(p16) - img).max())
        assert err16 < err8


class TestMasks:
    def test_binary_mask_round_trip(self, tmp_path, rng):
        mask = (rng.random((10, 10)) > 0.5).astype(np.float32)
        path = tmp_path / "mask.png"
        pngio.save_mask_weights(path, mask)
        back = pngio.load_mask_weights(path)
        assert np.array_equal(back, mask)

    def test_soft_mask_linear_scale(self, tmp_path):
        mask = np.linspace(0, 1, 16, dtype=np.float32).reshape(4, 4)
        path = tmp_path / "soft.png"
        pngio.save_mask_weights(path, mask)
        back = pngio.load_mask_weights(path)
        assert float(np.abs(back - mask).max()) <= 0.5 / 255 + 1e-9

    def test_mask_must_be_2d(self, tmp_path):
        with pytest.raises(ParameterError):
            pngio.save_mask_weights(tmp_path / "bad.png", np.zeros((4, 4, 3)))


class TestErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            pngio.load_image(tmp_path / "nope.png")

    def test_bad_bit_depth(self, tmp_path, rng):
        with pytest.raises(ParameterError):
            pngio.save_image(tmp_path / "x.png", rng.random((4, 4, 3)).astype(np.float32), bits=12)
