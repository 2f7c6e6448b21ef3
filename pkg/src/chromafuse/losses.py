"""Training losses: chroma L1, staged perceptual, patch adversarial, colorfulness.

All functions take torch tensors and stay differentiable; chroma inputs
may also be given as :class:`~chromafuse.colorspace.ChannelPair` objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping, Sequence

import torch
import torch.nn.functional as F

from .colorspace import ChannelPair, ColorSpace


class NonFiniteLossError(RuntimeError):
    """A loss term became NaN or infinite; `term` names the offender."""

    def __init__(self, term: str, value: float):
        super().__init__(f"loss term {term!r} is non-finite ({value})")
        self.term = term


def _default_space_weights() -> dict[ColorSpace, float]:
    return {ColorSpace.LAB: 0.1, ColorSpace.HSV: 10.0, ColorSpace.YUV: 10.0}


@dataclass
class LossWeights:
    """Trade-off weights of the full objective plus per-term sub-weights."""

    color_channel: float = 1.0
    perceptual: float = 5.0
    adversarial: float = 1.0
    colorfulness: float = 0.5
    space_weights: dict[ColorSpace, float] = field(default_factory=_default_space_weights)
    stage_weights: tuple[float, ...] = (0.0625, 0.125, 0.25, 0.5, 1.0)

    def __post_init__(self):
        scalars = [self.color_channel, self.perceptual, self.adversarial, self.colorfulness]
        if any(w < 0 for w in scalars):
            raise ValueError("loss weights must be nonnegative")
        self.space_weights = {ColorSpace(k): float(v) for k, v in self.space_weights.items()}
        if any(w < 0 for w in self.space_weights.values()):
            raise ValueError("per-space weights must be nonnegative")
        if any(w < 0 for w in self.stage_weights):
            raise ValueError("stage weights must be nonnegative")


@dataclass
class LossReport:
    """Unweighted loss terms of one step plus the weighted total."""

    color_channel: float
    perceptual: float
    adv_generator: float
    adv_discriminator: float
    colorfulness: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _as_space_map(pairs) -> dict[ColorSpace, torch.Tensor]:
    if isinstance(pairs, Mapping):
        items = [(ColorSpace(k), v) for k, v in pairs.items()]
    else:
        items = []
        for p in pairs:
            if not isinstance(p, ChannelPair):
                raise TypeError("expected ChannelPair objects or a space->tensor mapping")
            if not p.normalized:
                raise ValueError("channel pairs must be normalized for loss computation")
            items.append((p.space, p.channels))
    out: dict[ColorSpace, torch.Tensor] = {}
    for space, arr in items:
        if space in out:
            raise ValueError(f"duplicate color space {space.value}")
        out[space] = torch.as_tensor(arr, dtype=torch.get_default_dtype()) \
            if not torch.is_tensor(arr) else arr
    return out


def color_channel_loss(preds, gts, weights: LossWeights, reduction: str = "mean") -> torch.Tensor:
    """Weighted per-space L1 between predicted and target chroma channels."""
    if reduction not in ("mean", "sum"):
        raise ValueError("reduction must be 'mean' or 'sum'")
    pred_map = _as_space_map(preds)
    gt_map = _as_space_map(gts)
    if set(pred_map) != set(gt_map):
        raise ValueError(
            f"space sets differ: predictions {sorted(s.value for s in pred_map)} vs "
            f"targets {sorted(s.value for s in gt_map)}"
        )
    total = None
    for space, pred in pred_map.items():
        gt = gt_map[space]
        if pred.shape != gt.shape:
            raise ValueError(
                f"{space.value}: prediction shape {tuple(pred.shape)} != target {tuple(gt.shape)}"
            )
        if space not in weights.space_weights:
            raise ValueError(f"no weight configured for color space {space.value}")
        err = (pred - gt).abs()
        term = weights.space_weights[space] * (err.mean() if reduction == "mean" else err.sum())
        total = term if total is None else total + term
    return total


def perceptual_loss(pred: torch.Tensor, gt: torch.Tensor, extractor, weights: LossWeights) -> torch.Tensor:
    """Weighted L1 over the extractor's feature stages."""
    feats_pred = extractor(pred)
    feats_gt = extractor(gt)
    expected = len(weights.stage_weights)
    if len(feats_pred) != expected:
        raise ValueError(f"extractor produced {len(feats_pred)} stages, expected {expected}")
    total = None
    for w, fp, fg in zip(weights.stage_weights, feats_pred, feats_gt):
        term = w * (fp - fg).abs().mean()
        total = term if total is None else total + term
    return total


def adversarial_losses(
    disc_real: torch.Tensor, disc_fake: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Non-saturating patch GAN objectives from discriminator logits.

    Returns (generator loss, discriminator loss): the discriminator sums
    binary cross-entropies against real=1 / fake=0, the generator pushes
    fakes toward 1.
    """
    if not torch.isfinite(disc_real).all() or not torch.isfinite(disc_fake).all():
        raise ValueError("discriminator logits must be finite")
    gen = F.binary_cross_entropy_with_logits(disc_fake, torch.ones_like(disc_fake))
    disc = F.binary_cross_entropy_with_logits(
        disc_real, torch.ones_like(disc_real)
    ) + F.binary_cross_entropy_with_logits(disc_fake, torch.zeros_like(disc_fake))
    return gen, disc


def _opponent_stats(img: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    if img.ndim == 3:
        img = img.unsqueeze(0)
    if img.ndim != 4 or img.shape[1] != 3:
        raise ValueError(f"expected (B, 3, H, W) or (3, H, W) image, got {tuple(img.shape)}")
    scaled = img * 255.0
    r, g, b = scaled[:, 0], scaled[:, 1], scaled[:, 2]
    rg = (r - g).flatten(1)
    yb = (0.5 * (r + g) - b).flatten(1)
    # Population statistics per image.
    var = rg.var(dim=1, correction=0) + yb.var(dim=1, correction=0)
    mean_sq = rg.mean(dim=1).square() + yb.mean(dim=1).square()
    return torch.sqrt(var), torch.sqrt(mean_sq)


def colorfulness_score(img: torch.Tensor) -> torch.Tensor:
    """Opponent-channel colorfulness statistic on 8-bit-scaled values.

    For a batch the per-image scores are averaged. Zero for any grayscale
    image; the gradient is undefined at exactly achromatic inputs.
    """
    sigma, mu = _opponent_stats(img)
    return (sigma + 0.3 * mu).mean()


def colorfulness_loss(img: torch.Tensor) -> torch.Tensor:
    """1 - score/100; may go negative for very colorful images (no clamp)."""
    return 1.0 - colorfulness_score(img) / 100.0


def total_loss(
    color_channel,
    perceptual,
    adv_generator,
    colorfulness,
    weights: LossWeights,
    adv_discriminator=0.0,
):
    """Combine unweighted terms into the training objective.

    Returns the weighted total (a tensor whenever any input carries a
    graph) and a float :class:`LossReport`. The discriminator term is
    reported but never enters the generator total.
    """
    parts = {
        "color_channel": color_channel,
        "perceptual": perceptual,
        "adv_generator": adv_generator,
        "adv_discriminator": adv_discriminator,
        "colorfulness": colorfulness,
    }
    plain: dict[str, float] = {}
    for name, value in parts.items():
        v = float(value.detach()) if torch.is_tensor(value) else float(value)
        if v != v or v in (float("inf"), float("-inf")):
            raise NonFiniteLossError(name, v)
        plain[name] = v
    total = (
        weights.color_channel * color_channel
        + weights.perceptual * perceptual
        + weights.adversarial * adv_generator
        + weights.colorfulness * colorfulness
    )
    report = LossReport(
        total=float(total.detach()) if torch.is_tensor(total) else float(total), **plain
    )
    return total, report
