import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage import color as sk_color

from chromafuse import colorspace as cs
from chromafuse.colorspace import ChannelPair, ColorSpace

SPACES = list(ColorSpace)


def rgb_grid(n=16):
    g = np.linspace(0.0, 1.0, n)
    r, gg, b = np.meshgrid(g, g, g, indexing="ij")
    return np.stack([r, gg, b], axis=-1).reshape(n * n, n, 3)


class TestRgbToSpace:
    def test_gray_102_yuv_anchor(self):
        img = np.full((3, 3, 3), 102 / 255)
        yuv = cs.rgb_to_space(img, ColorSpace.YUV)
        assert yuv[..., 0] == pytest.approx(0.4, abs=0)
        np.testing.assert_allclose(yuv[..., 1:], 0.0, atol=1e-12)

    def test_gray_102_lab_matches_reference(self):
        # Standard D65 pipeline puts gray 102/255 at L = 43.19.
        img = np.full((2, 2, 3), 102 / 255)
        lab = cs.rgb_to_space(img, ColorSpace.LAB)
        ref = sk_color.rgb2lab(img)
        np.testing.assert_allclose(lab, ref, atol=1e-2)
        assert lab[0, 0, 0] == pytest.approx(43.192, abs=1e-2)

    def test_white_point(self):
        white = np.ones((1, 1, 3))
        lab = cs.rgb_to_space(white, ColorSpace.LAB)[0, 0]
        np.testing.assert_allclose(lab, [100.0, 0.0, 0.0], atol=1e-9)
        hsv = cs.rgb_to_space(white, ColorSpace.HSV)[0, 0]
        assert hsv[1] == 0.0 and hsv[2] == 1.0
        yuv = cs.rgb_to_space(white, ColorSpace.YUV)[0, 0]
        np.testing.assert_allclose(yuv, [1.0, 0.0, 0.0], atol=1e-12)

    def test_lab_matches_skimage_on_random_images(self):
        rng = np.random.default_rng(0)
        img = rng.random((8, 8, 3))
        np.testing.assert_allclose(
            cs.rgb_to_space(img, ColorSpace.LAB), sk_color.rgb2lab(img), atol=1e-2
        )

    def test_hsv_matches_skimage_on_random_images(self):
        rng = np.random.default_rng(1)
        img = rng.random((8, 8, 3))
        np.testing.assert_allclose(
            cs.rgb_to_space(img, ColorSpace.HSV), sk_color.rgb2hsv(img), atol=1e-9
        )

    def test_yuv_extremes(self):
        # Chroma is scaled so pure hues hit exactly +/-0.5.
        blue = np.zeros((1, 1, 3))
        blue[0, 0, 2] = 1.0
        yuv = cs.rgb_to_space(blue, ColorSpace.YUV)[0, 0]
        assert yuv[1] == pytest.approx(0.5, abs=1e-12)
        red = np.zeros((1, 1, 3))
        red[0, 0, 0] = 1.0
        assert cs.rgb_to_space(red, ColorSpace.YUV)[0, 0, 2] == pytest.approx(0.5)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            cs.rgb_to_space(np.full((2, 2, 3), 1.5), ColorSpace.LAB)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            cs.rgb_to_space(np.zeros((4, 4)), ColorSpace.HSV)


class TestSpaceToRgb:
    @pytest.mark.parametrize("space", SPACES)
    def test_grid_round_trip(self, space):
        rgb = rgb_grid(16)
        back, frac = cs.space_to_rgb(cs.rgb_to_space(rgb, space), space)
        assert np.abs(back - rgb).max() < 1e-4
        assert frac == 0.0

    def test_lab_white_to_rgb(self):
        lab = np.array([[[100.0, 0.0, 0.0]]])
        rgb, frac = cs.space_to_rgb(lab, ColorSpace.LAB)
        np.testing.assert_allclose(rgb, 1.0, atol=1e-9)
        assert frac == 0.0

    def test_yuv_zero_chroma(self):
        yuv = np.array([[[0.4, 0.0, 0.0]]])
        rgb, _ = cs.space_to_rgb(yuv, ColorSpace.YUV)
        np.testing.assert_allclose(rgb, 0.4, atol=1e-12)

    def test_out_of_gamut_reported_and_clamped(self):
        yuv = np.array([[[0.9, 0.5, 0.5]], [[0.5, 0.0, 0.0]]])
        rgb, frac = cs.space_to_rgb(yuv, ColorSpace.YUV)
        assert frac == pytest.approx(0.5)
        assert rgb.min() >= 0.0 and rgb.max() <= 1.0


class TestExtractColorChannels:
    @pytest.mark.parametrize("space", SPACES)
    def test_gray_gives_zero_chroma_value(self, space):
        img = np.full((4, 4, 3), 0.3)
        pair = cs.extract_color_channels(img, space)
        expected = cs.zero_chroma_value(space)
        np.testing.assert_allclose(pair.channels[..., 0], expected[0], atol=1e-9)
        np.testing.assert_allclose(pair.channels[..., 1], expected[1], atol=1e-9)
        assert pair.normalized and pair.space is space

    def test_red_hsv_before_normalization(self):
        red = np.zeros((1, 1, 3))
        red[0, 0, 0] = 1.0
        pair = cs.extract_color_channels(red, ColorSpace.HSV)
        raw = cs.denormalize_chroma(pair.channels, ColorSpace.HSV)
        np.testing.assert_allclose(raw[0, 0], [0.0, 1.0], atol=1e-12)

    def test_red_lab_before_normalization(self):
        # Reference D65 values for sRGB red: a = 80.09, b = 67.20.
        red = np.zeros((1, 1, 3))
        red[0, 0, 0] = 1.0
        pair = cs.extract_color_channels(red, ColorSpace.LAB)
        raw = cs.denormalize_chroma(pair.channels, ColorSpace.LAB)
        np.testing.assert_allclose(raw[0, 0], [80.09, 67.20], atol=0.05)

    @pytest.mark.parametrize("space", SPACES)
    def test_normalized_range(self, space):
        rng = np.random.default_rng(7)
        pair = cs.extract_color_channels(rng.random((16, 16, 3)), space)
        assert np.abs(pair.channels).max() <= 1.0 + 1e-9


class TestComposeFixed:
    def test_gray_plus_zero_chroma_is_gray(self):
        g = np.linspace(0, 1, 16).reshape(4, 4)
        z = cs.zero_chroma_value(ColorSpace.YUV)
        pair = ChannelPair(np.broadcast_to(z, (4, 4, 2)).copy(), ColorSpace.YUV)
        rgb, frac = cs.compose_fixed(g, pair)
        np.testing.assert_allclose(rgb, np.repeat(g[..., None], 3, axis=2), atol=1e-9)
        assert frac == 0.0

    @pytest.mark.parametrize("space", SPACES)
    def test_extract_compose_round_trip(self, space):
        rng = np.random.default_rng(3)
        img = rng.random((8, 8, 3))
        pair = cs.extract_color_channels(img, space)
        gray = cs.rgb_to_space(img, space)[..., cs.BRIGHTNESS_INDEX[space]]
        if space is ColorSpace.LAB:
            # Invert L* back to the gray level the brightness mapping expects.
            gray = cs.linear_to_srgb(cs._lab_f_inv((gray + 16.0) / 116.0))
        rgb, _ = cs.compose_fixed(gray, pair)
        assert np.abs(rgb - img).max() < 1e-4

    def test_yuv_max_chroma_is_out_of_gamut(self):
        g = np.full((4, 4), 0.5)
        pair = ChannelPair(np.ones((4, 4, 2)), ColorSpace.YUV)
        rgb, frac = cs.compose_fixed(g, pair)
        assert frac > 0.0
        assert rgb.max() <= 1.0

    def test_spatial_mismatch_rejected(self):
        pair = ChannelPair(np.zeros((4, 4, 2)), ColorSpace.LAB)
        with pytest.raises(ValueError):
            cs.compose_fixed(np.zeros((8, 8)), pair)


class TestGamutSlice:
    def test_lab_slice_at_white_is_tiny(self):
        sl = cs.gamut_slice(1.0, ColorSpace.LAB, 65)
        center = sl.mask[32, 32]
        assert center
        assert sl.mask.mean() < 0.01

    def test_yuv_slice_matches_linear_inequality_oracle(self):
        sl = cs.gamut_slice(102 / 255, ColorSpace.YUV, 64)
        y = 0.4
        u = sl.axis_first[:, None]
        v = sl.axis_second[None, :]
        r = y + 1.402 * v
        b = y + 1.772 * u
        g = (y - 0.299 * r - 0.114 * b) / 0.587
        eps = 1e-9
        oracle = np.ones((64, 64), dtype=bool)
        for ch in (r, g, b):
            oracle = oracle & (ch >= -eps) & (ch <= 1.0 + eps)
        np.testing.assert_array_equal(sl.mask, oracle)

    def test_yuv_slice_is_convex(self):
        # Rows and columns of a convex region are contiguous runs.
        mask = cs.gamut_slice(0.4, ColorSpace.YUV, 64).mask
        for line in list(mask) + list(mask.T):
            idx = np.flatnonzero(line)
            if idx.size:
                assert idx[-1] - idx[0] + 1 == idx.size

    @pytest.mark.parametrize("v", [0.2, 0.5, 1.0])
    def test_hsv_slice_all_true(self, v):
        assert cs.gamut_slice(v, ColorSpace.HSV, 32).mask.all()

    def test_masks_differ_between_spaces(self):
        slices = [cs.gamut_slice(0.4, s, 48).mask for s in SPACES]
        assert not np.array_equal(slices[0], slices[2])
        assert not np.array_equal(slices[1], slices[2])

    def test_extreme_grays_nearly_degenerate(self):
        for g in (0.0, 1.0):
            for space in (ColorSpace.LAB, ColorSpace.YUV):
                assert cs.gamut_slice(g, space, 33).mask.mean() < 0.01

    def test_preview_shape_and_range(self):
        sl = cs.gamut_slice(0.4, ColorSpace.YUV, 16)
        assert sl.preview.shape == (16, 16, 3)
        assert sl.preview.min() >= 0.0 and sl.preview.max() <= 1.0

    def test_resolution_validated(self):
        with pytest.raises(ValueError):
            cs.gamut_slice(0.4, ColorSpace.YUV, 1)


class TestInvariants:
    @given(
        st.lists(st.floats(0.0, 1.0), min_size=12, max_size=12),
        st.sampled_from(SPACES),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, values, space):
        rgb = np.array(values).reshape(2, 2, 3)
        back, _ = cs.space_to_rgb(cs.rgb_to_space(rgb, space), space)
        assert np.abs(back - rgb).max() < 1e-6

    @pytest.mark.parametrize("space", SPACES)
    def test_brightness_preserves_gray_ordering(self, space):
        levels = np.linspace(0, 1, 32)
        ramp = np.repeat(levels, 3).reshape(1, 32, 3)
        bright = cs.rgb_to_space(ramp, space)[0, :, cs.BRIGHTNESS_INDEX[space]]
        assert np.all(np.diff(bright) > 0)

    @pytest.mark.parametrize("space", SPACES)
    def test_achromatic_round_trip(self, space):
        g = np.linspace(0.05, 0.95, 9).reshape(3, 3)
        pair = cs.extract_color_channels(np.repeat(g[..., None], 3, axis=2), space)
        rgb, _ = cs.compose_fixed(g, pair)
        np.testing.assert_allclose(rgb, np.repeat(g[..., None], 3, axis=2), atol=1e-6)


class TestChannelPair:
    def test_rejects_out_of_range_normalized(self):
        with pytest.raises(ValueError):
            ChannelPair(np.full((2, 2, 2), 1.5), ColorSpace.LAB, normalized=True)

    def test_allows_raw_values_when_not_normalized(self):
        ChannelPair(np.full((2, 2, 2), 80.0), ColorSpace.LAB, normalized=False)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            ChannelPair(np.zeros((2, 2, 3)), ColorSpace.LAB)

    def test_space_parse(self):
        assert ColorSpace.parse(" Lab ") is ColorSpace.LAB
        with pytest.raises(ValueError):
            ColorSpace.parse("cmyk")
