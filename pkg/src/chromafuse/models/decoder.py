"""Query-based chroma prediction for one color space.

A stack of decoder layers refines a set of learned color queries against
the coarse pyramid levels; a correlation head then scores every query at
every full-resolution pixel and a 1x1 convolution turns the scores into
the two normalized chroma channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import torch
from torch import nn

from .encoder import FeaturePyramid


@dataclass
class DecoderConfig:
    num_queries: int = 100
    embed_dim: int = 256
    heads: int = 8
    ffn_dim: int | None = None
    num_rounds: int = 3
    feature_scales: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if self.num_rounds < 1:
            raise ValueError("num_rounds must be at least 1")
        if self.num_queries < 1:
            raise ValueError("num_queries must be at least 1")
        if self.embed_dim % self.heads:
            raise ValueError("embed_dim must be divisible by heads")
        if not self.feature_scales or any(s not in (1, 2, 3) for s in self.feature_scales):
            raise ValueError("feature_scales must be a nonempty subset of (1, 2, 3)")
        if self.ffn_dim is None:
            self.ffn_dim = 4 * self.embed_dim

    @property
    def layer_scales(self) -> tuple[int, ...]:
        """Pyramid level visited by each layer, coarse-to-fine cycles."""
        return tuple(self.feature_scales) * self.num_rounds


def sinusoidal_position_encoding(
    height: int, width: int, channels: int, device=None, dtype=None
) -> torch.Tensor:
    """2D sine/cosine position encoding of shape (height*width, channels)."""
    if channels % 4:
        raise ValueError("position encoding needs channels divisible by 4")
    quarter = channels // 4
    freqs = 10000.0 ** (-torch.arange(quarter, device=device, dtype=torch.float64) / quarter)
    ys = torch.arange(height, device=device, dtype=torch.float64)[:, None] * freqs
    xs = torch.arange(width, device=device, dtype=torch.float64)[:, None] * freqs
    y_emb = torch.cat([ys.sin(), ys.cos()], dim=1)  # (H, C/2)
    x_emb = torch.cat([xs.sin(), xs.cos()], dim=1)  # (W, C/2)
    grid = torch.cat(
        [
            y_emb[:, None, :].expand(height, width, channels // 2),
            x_emb[None, :, :].expand(height, width, channels // 2),
        ],
        dim=2,
    )
    return grid.reshape(height * width, channels).to(dtype=dtype or torch.float32)


def feature_tokens(feature_map: torch.Tensor, with_position: bool = True) -> torch.Tensor:
    """Flatten (B, C, H, W) into (B, H*W, C) tokens, adding position encodings."""
    b, c, h, w = feature_map.shape
    tokens = feature_map.flatten(2).transpose(1, 2)
    if with_position:
        pos = sinusoidal_position_encoding(
            h, w, c, device=feature_map.device, dtype=feature_map.dtype
        )
        tokens = tokens + pos
    return tokens


class QueryDecoderLayer(nn.Module):
    """One refinement layer.

    The residual/normalization placement is, in order: cross-attention on
    the raw queries plus residual; self-attention on the normalized result
    plus residual; feed-forward on the normalized result plus residual,
    followed by a final normalization.
    """

    def __init__(self, embed_dim: int, token_dim: int, heads: int, ffn_dim: int):
        super().__init__()
        self.cross_attn = nn.MultiheadAttention(
            embed_dim, heads, kdim=token_dim, vdim=token_dim, batch_first=True
        )
        self.self_attn = nn.MultiheadAttention(embed_dim, heads, batch_first=True)
        self.norm_pre_self = nn.LayerNorm(embed_dim)
        self.norm_pre_ffn = nn.LayerNorm(embed_dim)
        self.norm_out = nn.LayerNorm(embed_dim)
        self.ffn = nn.Sequential(
            nn.Linear(embed_dim, ffn_dim),
            nn.ReLU(inplace=True),
            nn.Linear(ffn_dim, embed_dim),
        )

    def cross_attend(self, queries: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        """Cross-attention sub-step with its residual connection."""
        att, _ = self.cross_attn(queries, tokens, tokens, need_weights=False)
        return att + queries

    def forward(self, queries: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        x = self.cross_attend(queries, tokens)
        normed = self.norm_pre_self(x)
        x = self.self_attn(normed, normed, normed, need_weights=False)[0] + x
        x = self.norm_out(self.ffn(self.norm_pre_ffn(x)) + x)
        return x


class ColorizationModule(nn.Module):
    """Query refinement plus correlation head for a single color space."""

    def __init__(self, cfg: DecoderConfig, token_dims: Mapping[int, int], full_dim: int):
        super().__init__()
        if full_dim != cfg.embed_dim:
            raise ValueError(
                f"full-resolution feature dim {full_dim} must equal embed_dim {cfg.embed_dim}"
            )
        self.cfg = cfg
        self.queries = nn.Embedding(cfg.num_queries, cfg.embed_dim)
        self.layers = nn.ModuleList(
            QueryDecoderLayer(cfg.embed_dim, token_dims[scale], cfg.heads, cfg.ffn_dim)
            for scale in cfg.layer_scales
        )
        self.head = nn.Conv2d(cfg.num_queries, 2, kernel_size=1)
        # Correlations of normalized queries with C-dim features have O(sqrt(C))
        # magnitude; a small head init keeps the tanh in its linear regime.
        nn.init.normal_(self.head.weight, std=0.01)
        nn.init.zeros_(self.head.bias)

    def refine_queries(self, pyramid: FeaturePyramid) -> torch.Tensor:
        """Run all decoder layers over the configured scale cycle."""
        batch = pyramid.full.shape[0]
        x = self.queries.weight.unsqueeze(0).expand(batch, -1, -1)
        for layer, scale in zip(self.layers, self.cfg.layer_scales):
            x = layer(x, feature_tokens(pyramid.at_level(scale)))
        return x

    @staticmethod
    def correlation_volume(embeddings: torch.Tensor, full: torch.Tensor) -> torch.Tensor:
        """Per-pixel inner products of features with each query: (B, N, H, W)."""
        return torch.einsum("bnc,bchw->bnhw", embeddings, full)

    def map_colors(self, embeddings: torch.Tensor, full: torch.Tensor) -> torch.Tensor:
        """Correlation volume -> 1x1 conv -> tanh, giving (B, 2, H, W) in [-1, 1]."""
        return torch.tanh(self.head(self.correlation_volume(embeddings, full)))

    def forward(self, pyramid: FeaturePyramid) -> torch.Tensor:
        return self.map_colors(self.refine_queries(pyramid), pyramid.full)
