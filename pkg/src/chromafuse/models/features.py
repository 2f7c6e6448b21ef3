"""Frozen feature networks: perceptual stages and a metric embedder.

Both ship with deterministic seed-derived weights so that no pretrained
download is required; a real VGG-16 can be sliced into the same staged
interface when one is available.
"""

from __future__ import annotations

import math
from typing import Sequence

import torch
from torch import nn


def _seeded_init(module: nn.Module, seed: int) -> None:
    gen = torch.Generator().manual_seed(seed)
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            fan_in = m.in_channels * m.kernel_size[0] * m.kernel_size[1]
            m.weight.data.normal_(0.0, math.sqrt(2.0 / fan_in), generator=gen)
            if m.bias is not None:
                m.bias.data.zero_()


class StagedFeatureExtractor(nn.Module):
    """Runs stages sequentially and returns every stage output."""

    def __init__(self, stages: Sequence[nn.Module]):
        super().__init__()
        self.stages = nn.ModuleList(stages)

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        outputs = []
        for stage in self.stages:
            x = stage(x)
            outputs.append(x)
        return outputs


class FixedPerceptualExtractor(StagedFeatureExtractor):
    """Five-stage conv extractor with frozen, deterministic weights.

    Stage 1 is an identity-initialized 3-channel convolution, so its term
    is a plain pixel difference; the deeper stages are seed-derived random
    convolutions with damped gain. This desk-scale default trades learned
    semantics for a dependable pixel anchor; slice a pretrained VGG-16 via
    :func:`vgg16_stages` for feature-level supervision.
    """

    STAGE_CHANNELS = (3, 32, 64, 96, 128)

    def __init__(self, seed: int = 0, deep_gain: float = 0.5):
        stages = []
        in_ch = 3
        for i, ch in enumerate(self.STAGE_CHANNELS):
            layers: list[nn.Module] = []
            if i:
                layers.append(nn.AvgPool2d(2))
            layers += [nn.Conv2d(in_ch, ch, 3, padding=1), nn.ReLU(inplace=True)]
            stages.append(nn.Sequential(*layers))
            in_ch = ch
        super().__init__(stages)
        _seeded_init(self, seed)
        with torch.no_grad():
            first_conv = self.stages[0][0]
            first_conv.weight.zero_()
            for c in range(3):
                first_conv.weight[c, c, 1, 1] = 1.0
            for stage in self.stages[1:]:
                for m in stage.modules():
                    if isinstance(m, nn.Conv2d):
                        m.weight.mul_(deep_gain)
        self.requires_grad_(False)


def vgg16_stages(features: nn.Sequential) -> StagedFeatureExtractor:
    """Slice a torchvision VGG-16 `features` stack into five stages.

    Each stage ends right after the activation of the first convolution
    of blocks 1-5, so stage outputs match the usual relu_j_1 taps.
    """
    bounds = [(0, 2), (2, 7), (7, 12), (12, 19), (19, 26)]
    if len(features) < bounds[-1][1]:
        raise ValueError("module does not look like a VGG-16 feature stack")
    extractor = StagedFeatureExtractor(
        [nn.Sequential(*[features[i] for i in range(a, b)]) for a, b in bounds]
    )
    extractor.requires_grad_(False)
    return extractor


class FixedEmbedder(nn.Module):
    """Frozen conv embedder for distribution metrics.

    Produces one vector per image. Numbers computed with it are internally
    comparable only; they are not comparable to Inception-based scores.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        super().__init__()
        self.dim = dim
        self.net = nn.Sequential(
            nn.Conv2d(3, 32, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(64, dim, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(1),
        )
        _seeded_init(self, seed)
        self.requires_grad_(False)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        if images.ndim != 4 or images.shape[1] != 3:
            raise ValueError(f"expected (B, 3, H, W) input, got {tuple(images.shape)}")
        return self.net(images).flatten(1)
