"""The full colorization generator: encoder, per-space modules, fusion."""

from __future__ import annotations

import torch
from torch import nn

from ..colorspace import ColorSpace
from .decoder import ColorizationModule, DecoderConfig
from .encoder import EncoderConfig, FeaturePyramidEncoder
from .fusion import ChannelFusionNet, FusionConfig


class ColorizationGenerator(nn.Module):
    """Maps a gray image to RGB plus the per-space chroma predictions.

    Each configured color space gets its own, independently parameterized
    colorization module; the fusion network consumes the gray channel and
    all chroma pairs in the order of `spaces`.
    """

    def __init__(
        self,
        spaces: tuple[ColorSpace, ...],
        encoder_cfg: EncoderConfig,
        decoder_cfg: DecoderConfig,
        fusion_cfg: FusionConfig,
    ):
        super().__init__()
        if not spaces:
            raise ValueError("at least one color space is required")
        if len(set(spaces)) != len(spaces):
            raise ValueError("color spaces must be unique")
        if fusion_cfg.num_spaces != len(spaces):
            raise ValueError(
                f"fusion expects {fusion_cfg.num_spaces} spaces, generator got {len(spaces)}"
            )
        self.spaces = tuple(ColorSpace(s) for s in spaces)
        self.encoder = FeaturePyramidEncoder(encoder_cfg)
        token_dims = {1: encoder_cfg.stage_channels[0],
                      2: encoder_cfg.stage_channels[1],
                      3: encoder_cfg.stage_channels[2]}
        full_dim = encoder_cfg.stage_channels[3]
        self.chroma_modules = nn.ModuleDict(
            {s.value: ColorizationModule(decoder_cfg, token_dims, full_dim) for s in self.spaces}
        )
        self.fusion = ChannelFusionNet(fusion_cfg)

    def forward(
        self, gray: torch.Tensor
    ) -> tuple[torch.Tensor, dict[ColorSpace, torch.Tensor]]:
        pyramid = self.encoder(gray)
        pairs = {s: self.chroma_modules[s.value](pyramid) for s in self.spaces}
        rgb = self.fusion(gray, [pairs[s] for s in self.spaces])
        return rgb, pairs
