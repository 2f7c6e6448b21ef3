"""Conversions between sRGB and the three working color spaces.

All images are float arrays with channels last. sRGB values live in
[0, 1]; CIELAB uses the D65 white point with the standard sRGB
linearization, HSV is the hexcone model on [0, 1] coordinates, and YUV
pairs BT.601 luma with chroma scaled to [-0.5, 0.5] so that pure hues
sit exactly on the channel boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .validation import as_float_array, check_gray_image, check_rgb_image


class ColorSpace(str, enum.Enum):
    """One of the three working color spaces."""

    LAB = "lab"
    HSV = "hsv"
    YUV = "yuv"

    @classmethod
    def parse(cls, name: str) -> "ColorSpace":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown color space {name!r} (expected one of {valid})")


# Index of the brightness channel and of the two chroma channels within
# the full 3-channel representation of each space.
BRIGHTNESS_INDEX = {ColorSpace.LAB: 0, ColorSpace.HSV: 2, ColorSpace.YUV: 0}
CHROMA_INDICES = {
    ColorSpace.LAB: (1, 2),
    ColorSpace.HSV: (0, 1),
    ColorSpace.YUV: (1, 2),
}

# sRGB (linear) -> XYZ, IEC 61966-2-1 primaries. The white point is taken
# as the matrix row sums so that sRGB white maps to exactly L=100, a=b=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_SRGB = np.linalg.inv(_SRGB_TO_XYZ)
_WHITE_XYZ = _SRGB_TO_XYZ.sum(axis=1)

# BT.601 luma weights; chroma denominators chosen so U, V span [-0.5, 0.5].
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
_U_SCALE = 2.0 * (1.0 - LUMA_WEIGHTS[2])  # 1.772
_V_SCALE = 2.0 * (1.0 - LUMA_WEIGHTS[0])  # 1.402

# Chroma normalization: divisor mapping raw chroma into [-1, 1].
LAB_CHROMA_SCALE = 110.0
YUV_CHROMA_SCALE = 0.5

_LAB_DELTA = 6.0 / 29.0

# Tolerance below which out-of-range raw RGB is considered float noise.
GAMUT_EPS = 1e-9


@dataclass
class ChannelPair:
    """The two non-brightness channels of one color space (H x W x 2)."""

    channels: np.ndarray
    space: ColorSpace
    normalized: bool = True

    def __post_init__(self):
        self.channels = as_float_array(self.channels, "channel pair")
        if self.channels.ndim != 3 or self.channels.shape[2] != 2:
            raise ValueError(
                f"channel pair must have shape (H, W, 2), got {self.channels.shape}"
            )
        if self.normalized:
            peak = np.abs(self.channels).max()
            if peak > 1.0 + 1e-6:
                raise ValueError(
                    f"normalized channel pair exceeds [-1, 1] (max abs {peak:.6g})"
                )


def srgb_to_linear(x: np.ndarray) -> np.ndarray:
    """Undo the sRGB transfer function."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.04045, x / 12.92, ((x + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(x: np.ndarray) -> np.ndarray:
    """Apply the sRGB transfer function.

    Negative inputs use the sign-mirrored transfer so out-of-gamut values
    stay negative instead of being silently clipped.
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    out = np.where(a <= 0.0031308, 12.92 * a, 1.055 * a ** (1.0 / 2.4) - 0.055)
    return np.sign(x) * out


def _lab_f(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    cube = _LAB_DELTA ** 3
    return np.where(t > cube, np.cbrt(t), t / (3.0 * _LAB_DELTA ** 2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > _LAB_DELTA, t ** 3, 3.0 * _LAB_DELTA ** 2 * (t - 4.0 / 29.0))


def bt601_luma(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of an RGB image; this is also the YUV Y channel."""
    img = check_rgb_image(img)
    return img @ LUMA_WEIGHTS


def _rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    xyz = srgb_to_linear(rgb) @ _SRGB_TO_XYZ.T
    fx, fy, fz = (_lab_f(xyz[..., i] / _WHITE_XYZ[i]) for i in range(3))
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def _lab_to_rgb_raw(lab: np.ndarray) -> np.ndarray:
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack(
        [_lab_f_inv(f) * w for f, w in zip((fx, fy, fz), _WHITE_XYZ)], axis=-1
    )
    return linear_to_srgb(xyz @ _XYZ_TO_SRGB.T)


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)

    # Assignment order gives channel ties the conventional R > G > B priority.
    safe_c = np.where(c > 0, c, 1.0)
    h = np.zeros_like(v)
    h = np.where(v == b, 4.0 + (r - g) / safe_c, h)
    h = np.where(v == g, 2.0 + (b - r) / safe_c, h)
    h = np.where(v == r, ((g - b) / safe_c) % 6.0, h)
    h = np.where(c > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def _hsv_to_rgb_raw(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [
        (v, t, p),
        (q, v, p),
        (p, v, t),
        (p, q, v),
        (t, p, v),
        (v, p, q),
    ]
    r = np.choose(i, [ch[0] for ch in choices])
    g = np.choose(i, [ch[1] for ch in choices])
    b = np.choose(i, [ch[2] for ch in choices])
    return np.stack([r, g, b], axis=-1)


def _rgb_to_yuv(rgb: np.ndarray) -> np.ndarray:
    y = rgb @ LUMA_WEIGHTS
    u = (rgb[..., 2] - y) / _U_SCALE
    v = (rgb[..., 0] - y) / _V_SCALE
    return np.stack([y, u, v], axis=-1)


def _yuv_to_rgb_raw(yuv: np.ndarray) -> np.ndarray:
    y, u, v = yuv[..., 0], yuv[..., 1], yuv[..., 2]
    r = y + _V_SCALE * v
    b = y + _U_SCALE * u
    g = (y - LUMA_WEIGHTS[0] * r - LUMA_WEIGHTS[2] * b) / LUMA_WEIGHTS[1]
    return np.stack([r, g, b], axis=-1)


def rgb_to_space(img: np.ndarray, space: ColorSpace) -> np.ndarray:
    """Convert an sRGB image to the full 3-channel representation of a space."""
    rgb = check_rgb_image(img)
    space = ColorSpace(space)
    if space is ColorSpace.LAB:
        return _rgb_to_lab(rgb)
    if space is ColorSpace.HSV:
        return _rgb_to_hsv(rgb)
    return _rgb_to_yuv(rgb)


def _to_rgb_raw(arr: np.ndarray, space: ColorSpace) -> np.ndarray:
    if space is ColorSpace.LAB:
        return _lab_to_rgb_raw(arr)
    if space is ColorSpace.HSV:
        return _hsv_to_rgb_raw(arr)
    return _yuv_to_rgb_raw(arr)


def space_to_rgb(img3: np.ndarray, space: ColorSpace) -> tuple[np.ndarray, float]:
    """Convert a 3-channel space image back to sRGB.

    Returns the clamped RGB image together with the fraction of pixels
    whose raw conversion fell outside [0, 1] (out of gamut).
    """
    arr = as_float_array(img3, "space image")
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"space image must have shape (H, W, 3), got {arr.shape}")
    space = ColorSpace(space)
    raw = _to_rgb_raw(arr, space)
    out_of_gamut = np.any((raw < -GAMUT_EPS) | (raw > 1.0 + GAMUT_EPS), axis=-1)
    return np.clip(raw, 0.0, 1.0), float(out_of_gamut.mean())


def gray_to_brightness(gray: np.ndarray | float, space: ColorSpace) -> np.ndarray | float:
    """Map gray values to the brightness channel of a space (L, V, or Y).

    For a gray pixel the HSV value and the BT.601 luma both equal the gray
    level itself; CIELAB lightness applies the nonlinear L* transform.
    """
    space = ColorSpace(space)
    g = np.asarray(gray, dtype=np.float64)
    if space is ColorSpace.LAB:
        out = 116.0 * _lab_f(srgb_to_linear(g)) - 16.0
    else:
        out = g
    return float(out) if np.isscalar(gray) else np.asarray(out)


def normalize_chroma(raw: np.ndarray, space: ColorSpace) -> np.ndarray:
    """Scale raw chroma channels into [-1, 1]."""
    space = ColorSpace(space)
    raw = np.asarray(raw, dtype=np.float64)
    if space is ColorSpace.LAB:
        return raw / LAB_CHROMA_SCALE
    if space is ColorSpace.HSV:
        return raw * 2.0 - 1.0
    return raw / YUV_CHROMA_SCALE


def denormalize_chroma(norm: np.ndarray, space: ColorSpace) -> np.ndarray:
    """Invert :func:`normalize_chroma`."""
    space = ColorSpace(space)
    norm = np.asarray(norm, dtype=np.float64)
    if space is ColorSpace.LAB:
        return norm * LAB_CHROMA_SCALE
    if space is ColorSpace.HSV:
        return (norm + 1.0) / 2.0
    return norm * YUV_CHROMA_SCALE


def zero_chroma_value(space: ColorSpace) -> tuple[float, float]:
    """The normalized chroma pair of an achromatic pixel."""
    space = ColorSpace(space)
    if space is ColorSpace.HSV:
        # H = 0, S = 0 map affinely to -1.
        return (-1.0, -1.0)
    return (0.0, 0.0)


def extract_color_channels(img: np.ndarray, space: ColorSpace) -> ChannelPair:
    """Extract the normalized two non-brightness channels of an image."""
    space = ColorSpace(space)
    full = rgb_to_space(img, space)
    i, j = CHROMA_INDICES[space]
    raw = np.stack([full[..., i], full[..., j]], axis=-1)
    return ChannelPair(normalize_chroma(raw, space), space, normalized=True)


def compose_fixed(
    gray: np.ndarray, pair: ChannelPair
) -> tuple[np.ndarray, float]:
    """Fixed (non-learned) mapping from gray plus one chroma pair to sRGB.

    The gray image supplies the brightness channel of the pair's space,
    the pair is denormalized, and the assembled triple is converted back
    to sRGB. Returns the image and the out-of-gamut fraction.
    """
    g = check_gray_image(gray)
    if not pair.normalized:
        raise ValueError("compose_fixed expects a normalized channel pair")
    if pair.channels.shape[:2] != g.shape:
        raise ValueError(
            f"gray {g.shape} and channel pair {pair.channels.shape[:2]} "
            "spatial sizes differ"
        )
    space = pair.space
    raw = denormalize_chroma(pair.channels, space)
    full = np.empty(g.shape + (3,), dtype=np.float64)
    full[..., BRIGHTNESS_INDEX[space]] = gray_to_brightness(g, space)
    i, j = CHROMA_INDICES[space]
    full[..., i] = raw[..., 0]
    full[..., j] = raw[..., 1]
    return space_to_rgb(full, space)


@dataclass
class GamutSlice:
    """In-gamut mask and RGB preview of a chroma plane at fixed brightness."""

    mask: np.ndarray
    preview: np.ndarray
    axis_first: np.ndarray = field(repr=False)
    axis_second: np.ndarray = field(repr=False)
    space: ColorSpace = ColorSpace.LAB
    brightness: float = 0.0


def gamut_slice(gray_value: float, space: ColorSpace, resolution: int) -> GamutSlice:
    """Sample the chroma plane of a space at the brightness of a gray value.

    ``mask[i, j]`` is true iff the triple (brightness, c1[i], c2[j])
    converts to an sRGB value inside [0, 1] without clamping, where the
    chroma axes sweep the denormalized [-1, 1] prediction range. The
    preview shows the converted color for in-gamut cells and white
    elsewhere.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if not 0.0 <= gray_value <= 1.0:
        raise ValueError("gray_value must lie in [0, 1]")
    space = ColorSpace(space)
    grid = np.linspace(-1.0, 1.0, resolution)
    c1 = denormalize_chroma(grid, space)
    c2 = denormalize_chroma(grid, space)
    brightness = float(gray_to_brightness(gray_value, space))

    full = np.empty((resolution, resolution, 3), dtype=np.float64)
    full[..., BRIGHTNESS_INDEX[space]] = brightness
    i, j = CHROMA_INDICES[space]
    full[..., i] = c1[:, None]
    full[..., j] = c2[None, :]

    raw = _to_rgb_raw(full, space)
    mask = np.all((raw >= -GAMUT_EPS) & (raw <= 1.0 + GAMUT_EPS), axis=-1)
    preview = np.where(mask[..., None], np.clip(raw, 0.0, 1.0), 1.0)
    return GamutSlice(mask, preview, c1, c2, space, brightness)
