import numpy as np
import pytest

from flarebench import postproc
from flarebench.errors import ParameterError
from flarebench.regionmask import extract_light_mask


def with_saturated_block(rng, size=16, block=4):
    img = (rng.random((size, size, 3)) * 0.6).astype(np.float32)
    y = int(rng.integers(0, size - block))
    x = int(rng.integers(0, size - block))
    img[y:y + block, x:x + block] = 1.0
    return img


class TestBlendBack:
    def test_no_saturation_returns_prediction(self, rng):
        pred = rng.random((8, 8, 3)).astype(np.float32)
        dark = (rng.random((8, 8, 3)) * 0.5).astype(np.float32)
        out = postproc.blend_back_light_source(pred, dark)
        assert np.array_equal(out, pred)

    def test_prediction_equal_to_input(self, rng):
        img = with_saturated_block(rng)
        out = postproc.blend_back_light_source(img, img)
        assert np.allclose(out, img, atol=1e-7)

    def test_block_oracle(self, rng):
        size, block = 16, 4
        inp = (rng.random((size, size, 3)) * 0.5).astype(np.float32)
        inp[6:10, 5:9] = 1.0
        pred = rng.random((size, size, 3)).astype(np.float32) * 0.9
        out = postproc.blend_back_light_source(pred, inp, threshold=0.99, se_radius=1)
        mask = extract_light_mask(inp, 0.99, 1).weights.astype(bool)
        for i in range(size):
            for j in range(size):
                want = inp[i, j] if mask[i, j] else pred[i, j]
                assert np.array_equal(out[i, j], want)

    def test_light_pixels_bit_exact(self, rng):
        inp = with_saturated_block(rng)
        pred = rng.random(inp.shape).astype(np.float32)
        out = postproc.blend_back_light_source(pred, inp)
        mask = extract_light_mask(inp, 0.99, 1).weights.astype(bool)
        assert mask.any()
        assert np.array_equal(out[mask], inp[mask])

    def test_idempotent(self, rng):
        for _ in range(10):
            inp = with_saturated_block(rng)
            pred = rng.random(inp.shape).astype(np.float32)
            once = postproc.blend_back_light_source(pred, inp)
            twice = postproc.blend_back_light_source(once, inp)
            assert np.array_equal(once, twice)

    def test_feathered_variant_runs(self, rng):
        inp = with_saturated_block(rng)
        pred = rng.random(inp.shape).astype(np.float32)
        out = postproc.blend_back_light_source(pred, inp, feather=5)
        assert out.shape == inp.shape


class TestBlendWithInput:
    def test_endpoints(self, rng):
        pred = rng.random((6, 6, 3)).astype(np.float32)
        inp = rng.random((6, 6, 3)).astype(np.float32)
        assert np.allclose(postproc.blend_with_input(pred, inp, 1.0), pred, atol=1e-7)
        assert np.allclose(postproc.blend_with_input(pred, inp, 0.0), inp, atol=1e-7)

    def test_midpoint(self):
        pred = np.ones((4, 4, 3), dtype=np.float32)
        inp = np.zeros((4, 4, 3), dtype=np.float32)
        assert np.allclose(postproc.blend_with_input(pred, inp, 0.5), 0.5)

    def test_monotone_in_alpha(self, rng):
        inp = (rng.random((5, 5, 3)) * 0.4).astype(np.float32)
        pred = inp + 0.3
        lo = postproc.blend_with_input(pred, inp, 0.2)
        hi = postproc.blend_with_input(pred, inp, 0.8)
        assert np.all(hi >= lo)

    @pytest.mark.parametrize("alpha", [-0.1, 1.1])
    def test_alpha_domain(self, alpha, rng):
        img = rng.random((4, 4, 3)).astype(np.float32)
        with pytest.raises(ParameterError):
            postproc.blend_with_input(img, img, alpha)
