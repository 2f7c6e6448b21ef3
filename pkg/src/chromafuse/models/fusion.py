"""Learned fusion of grayscale plus per-space chroma into one RGB image.

Replaces the fixed color-space mapping with a small differentiable
network: the gray channel and every predicted chroma pair are
concatenated and pushed through five convolutional blocks at constant
spatial resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
from torch import nn

# Block 5 is always present: it narrows to 32 channels and emits RGB.
_FINAL_MID = 32
_FINAL_OUT = 3


@dataclass
class FusionConfig:
    num_spaces: int = 3
    block_channels: tuple[int, int, int, int] = (32, 64, 128, 64)
    kernel_sizes: tuple[int, int] = (1, 3)
    repeats: tuple[int, int, int, int] = (1, 1, 1, 1)

    def __post_init__(self):
        if self.num_spaces < 1:
            raise ValueError("num_spaces must be at least 1")
        if len(self.block_channels) != 4 or any(c <= 0 for c in self.block_channels):
            raise ValueError("block_channels must be 4 positive ints")
        if len(self.repeats) != 4 or any(r < 0 for r in self.repeats):
            raise ValueError("repeats must be 4 nonnegative ints")
        if self.repeats[0] < 1:
            raise ValueError("the first block must have at least one repeat")
        if len(self.kernel_sizes) != 2 or any(k < 1 or k % 2 == 0 for k in self.kernel_sizes):
            raise ValueError("kernel_sizes must be two odd positive ints")

    @property
    def input_channels(self) -> int:
        return 1 + 2 * self.num_spaces

    def channel_trace(self) -> tuple[int, ...]:
        """Output channels of each active block, ending with RGB."""
        trace = [c for c, r in zip(self.block_channels, self.repeats) if r > 0]
        return tuple(trace) + (_FINAL_OUT,)


def _unit(in_ch: int, mid_ch: int, out_ch: int, k1: int, k2: int) -> nn.Sequential:
    """conv -> BN -> ReLU -> conv -> BN -> ReLU at constant resolution."""
    return nn.Sequential(
        nn.Conv2d(in_ch, mid_ch, k1, padding=k1 // 2),
        nn.BatchNorm2d(mid_ch),
        nn.ReLU(inplace=True),
        nn.Conv2d(mid_ch, out_ch, k2, padding=k2 // 2),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class ChannelFusionNet(nn.Module):
    """Five-block fusion network; output clamped to [0, 1] RGB."""

    def __init__(self, cfg: FusionConfig):
        super().__init__()
        self.cfg = cfg
        k1, k2 = cfg.kernel_sizes
        units = []
        in_ch = cfg.input_channels
        for channels, repeats in zip(cfg.block_channels, cfg.repeats):
            for _ in range(repeats):
                units.append(_unit(in_ch, channels, channels, k1, k2))
                in_ch = channels
        units.append(_unit(in_ch, _FINAL_MID, _FINAL_OUT, k1, k2))
        self.body = nn.Sequential(*units)

    def forward(self, gray: torch.Tensor, pairs: Sequence[torch.Tensor]) -> torch.Tensor:
        pairs = list(pairs)
        if len(pairs) != self.cfg.num_spaces:
            raise ValueError(
                f"expected {self.cfg.num_spaces} chroma pairs, got {len(pairs)}"
            )
        if gray.ndim != 4 or gray.shape[1] != 1:
            raise ValueError(f"gray input must be (B, 1, H, W), got {tuple(gray.shape)}")
        for p in pairs:
            if p.shape[0] != gray.shape[0] or p.shape[1] != 2 or p.shape[2:] != gray.shape[2:]:
                raise ValueError(
                    f"chroma pair shape {tuple(p.shape)} incompatible with gray "
                    f"{tuple(gray.shape)}"
                )
        x = torch.cat([gray, *pairs], dim=1)
        raw = self.body(x)
        # Straight-through clamp: values stay in [0, 1] but gradients pass
        # unchanged, so saturated pixels do not become permanently stuck.
        return raw + (torch.clamp(raw, 0.0, 1.0) - raw).detach()


def fusion_parameter_count(cfg: FusionConfig) -> int:
    """Exact number of trainable parameters for a fusion configuration."""
    net = ChannelFusionNet(cfg)
    return sum(p.numel() for p in net.parameters() if p.requires_grad)
