"""Grayscale encoder producing a four-level feature pyramid.

A small strided-convolution backbone extracts features at 1/2, 1/4, 1/8
and 1/16 resolution; an upsampling path built from convolution +
pixel-shuffle stages walks back up, concatenating the backbone feature
at each matching resolution, and emits maps at 1/16, 1/8, 1/4 and full
resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class EncoderConfig:
    stage_channels: tuple[int, int, int, int] = (512, 512, 256, 256)
    backbone_widths: tuple[int, int, int, int] = (64, 128, 256, 512)
    input_size: tuple[int, int] | None = None

    def __post_init__(self):
        if len(self.stage_channels) != 4 or any(c <= 0 for c in self.stage_channels):
            raise ValueError("stage_channels must be 4 positive ints")
        if len(self.backbone_widths) != 4 or any(c <= 0 for c in self.backbone_widths):
            raise ValueError("backbone_widths must be 4 positive ints")
        if self.input_size is not None:
            h, w = self.input_size
            if h % 16 or w % 16:
                raise ValueError(f"input size {self.input_size} must be divisible by 16")


@dataclass
class FeaturePyramid:
    """Feature maps at 1/16, 1/8, 1/4 and full input resolution."""

    sixteenth: torch.Tensor
    eighth: torch.Tensor
    quarter: torch.Tensor
    full: torch.Tensor

    def coarse_to_fine(self) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """The three coarse maps the query decoder cycles over."""
        return self.sixteenth, self.eighth, self.quarter

    def at_level(self, level: int) -> torch.Tensor:
        """Pyramid level by index: 1 = 1/16, 2 = 1/8, 3 = 1/4, 4 = full."""
        return (self.sixteenth, self.eighth, self.quarter, self.full)[level - 1]


def _conv_block(in_ch: int, out_ch: int, stride: int = 1) -> nn.Sequential:
    # GroupNorm keeps the block usable at any batch size and resolution.
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1),
        nn.GroupNorm(1, out_ch),
        nn.ReLU(inplace=True),
    )


def _pixel_shuffle_up(in_ch: int, out_ch: int) -> nn.Sequential:
    """x2 spatial upsampling via convolution + pixel shuffle."""
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch * 4, 3, padding=1),
        nn.PixelShuffle(2),
    )


class FeaturePyramidEncoder(nn.Module):
    """Backbone plus upsampling stages emitting a :class:`FeaturePyramid`."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        w = cfg.backbone_widths
        c1, c2, c3, c4 = cfg.stage_channels

        # Backbone levels at 1/2, 1/4, 1/8, 1/16 resolution.
        self.down_half = nn.Sequential(_conv_block(1, w[0], 2), _conv_block(w[0], w[0]))
        self.down_quarter = nn.Sequential(_conv_block(w[0], w[1], 2), _conv_block(w[1], w[1]))
        self.down_eighth = nn.Sequential(_conv_block(w[1], w[2], 2), _conv_block(w[2], w[2]))
        self.down_sixteenth = nn.Sequential(_conv_block(w[2], w[3], 2), _conv_block(w[3], w[3]))

        # Upsampling path; each stage = up (conv + pixel shuffle), concat
        # with the backbone feature of matching resolution, fuse conv.
        self.lateral = _conv_block(w[3], c1)
        self.up_to_eighth = _pixel_shuffle_up(c1, c2)
        self.fuse_eighth = _conv_block(c2 + w[2], c2)
        self.up_to_quarter = _pixel_shuffle_up(c2, c3)
        self.fuse_quarter = _conv_block(c3 + w[1], c3)
        # The final stage covers a x4 jump with two stacked pixel-shuffle
        # steps; only the first has a matching backbone feature (1/2).
        self.up_to_half = _pixel_shuffle_up(c3, c4)
        self.fuse_half = _conv_block(c4 + w[0], c4)
        self.up_to_full = _pixel_shuffle_up(c4, c4)
        self.fuse_full = _conv_block(c4, c4)

    def forward(self, gray: torch.Tensor) -> FeaturePyramid:
        if gray.ndim != 4 or gray.shape[1] != 1:
            raise ValueError(f"expected gray input of shape (B, 1, H, W), got {tuple(gray.shape)}")
        _, _, h, w = gray.shape
        if h % 16 or w % 16:
            raise ValueError(f"input size {h}x{w} must be divisible by 16")
        if self.cfg.input_size is not None and (h, w) != tuple(self.cfg.input_size):
            raise ValueError(
                f"input size {h}x{w} does not match configured {self.cfg.input_size}"
            )

        b_half = self.down_half(gray)
        b_quarter = self.down_quarter(b_half)
        b_eighth = self.down_eighth(b_quarter)
        b_sixteenth = self.down_sixteenth(b_eighth)

        f_sixteenth = self.lateral(b_sixteenth)
        x = self.up_to_eighth(f_sixteenth)
        f_eighth = self.fuse_eighth(torch.cat([x, b_eighth], dim=1))
        x = self.up_to_quarter(f_eighth)
        f_quarter = self.fuse_quarter(torch.cat([x, b_quarter], dim=1))
        x = self.up_to_half(f_quarter)
        x = self.fuse_half(torch.cat([x, b_half], dim=1))
        x = self.up_to_full(x)
        f_full = self.fuse_full(x)
        return FeaturePyramid(f_sixteenth, f_eighth, f_quarter, f_full)
