"""Patch-level adversarial discriminator over RGB images.

Standard image-to-image translation design: 4x4 convolutions, stride-2
downsampling with channel doubling and LeakyReLU(0.2), ending in a
one-channel logit map where each cell judges one receptive-field patch.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class PatchDiscriminatorConfig:
    num_layers: int = 3
    base_channels: int = 64

    def __post_init__(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be at least 1")
        if self.base_channels < 1:
            raise ValueError("base_channels must be positive")


def logit_map_size(size: int, cfg: PatchDiscriminatorConfig) -> int:
    """Spatial extent of the logit map for a square input of `size` pixels.

    Each stride-2 layer maps n -> (n - 2) // 2 + 1; the two final stride-1
    4x4 convolutions each subtract one.
    """
    n = size
    for _ in range(cfg.num_layers):
        n = (n - 2) // 2 + 1
    return n - 2


class PatchDiscriminator(nn.Module):
    def __init__(self, cfg: PatchDiscriminatorConfig | None = None):
        super().__init__()
        self.cfg = cfg or PatchDiscriminatorConfig()
        base = self.cfg.base_channels
        # InstanceNorm (the CycleGAN variant of this design) keeps real and
        # fake statistics independent of batch composition.
        layers = [nn.Conv2d(3, base, 4, stride=2, padding=1), nn.LeakyReLU(0.2, inplace=True)]
        ch = base
        for i in range(1, self.cfg.num_layers):
            nxt = base * min(2 ** i, 8)
            layers += [
                nn.Conv2d(ch, nxt, 4, stride=2, padding=1, bias=False),
                nn.InstanceNorm2d(nxt),
                nn.LeakyReLU(0.2, inplace=True),
            ]
            ch = nxt
        nxt = base * min(2 ** self.cfg.num_layers, 8)
        layers += [
            nn.Conv2d(ch, nxt, 4, stride=1, padding=1, bias=False),
            nn.InstanceNorm2d(nxt),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(nxt, 1, 4, stride=1, padding=1),
        ]
        self.net = nn.Sequential(*layers)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.ndim != 4 or img.shape[1] != 3:
            raise ValueError(f"expected (B, 3, H, W) input, got {tuple(img.shape)}")
        h, w = img.shape[2:]
        if logit_map_size(h, self.cfg) < 1 or logit_map_size(w, self.cfg) < 1:
            raise ValueError(
                f"input {h}x{w} is smaller than the discriminator receptive field"
            )
        return self.net(img)
