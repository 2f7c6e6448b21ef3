"""Grayscale colorization from multiple color spaces with learned fusion."""

from .colorspace import (
    ChannelPair,
    ColorSpace,
    compose_fixed,
    extract_color_channels,
    gamut_slice,
    rgb_to_space,
    space_to_rgb,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelPair",
    "ColorSpace",
    "compose_fixed",
    "extract_color_channels",
    "gamut_slice",
    "rgb_to_space",
    "space_to_rgb",
    "__version__",
]
