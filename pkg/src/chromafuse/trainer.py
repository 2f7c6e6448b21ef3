"""End-to-end self-supervised training: generator versus patch discriminator.

Each step derives the gray input and per-space chroma targets from a
batch of color images, updates the discriminator once, then updates the
generator once under the full weighted objective.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from . import losses as L
from .colorspace import ChannelPair, ColorSpace, bt601_luma, extract_color_channels
from .data import CorruptImageError
from .losses import LossReport, LossWeights
from .models import (
    ColorizationGenerator,
    DecoderConfig,
    EncoderConfig,
    FixedPerceptualExtractor,
    FusionConfig,
    PatchDiscriminator,
    PatchDiscriminatorConfig,
)
from .validation import check_image_batch, check_rgb_image

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    """Desk-scale defaults; the reference schedule constants are kept verbatim
    (initial rate 1e-4, halved at 80k iterations and every 40k thereafter,
    betas (0.9, 0.99), weight decay 0.01) and simply truncate to short runs."""

    iterations: int = 2000
    batch_size: int = 8
    image_size: int = 64
    learning_rate: float = 1e-4
    fusion_lr_scale: float = 1.0
    disc_lr_scale: float = 1.0
    lr_decay: float = 0.5
    lr_decay_start: int = 80_000
    lr_decay_interval: int = 40_000
    lr_milestones: tuple[int, ...] | None = None
    betas: tuple[float, float] = (0.9, 0.99)
    weight_decay: float = 0.01
    color_spaces: tuple[ColorSpace, ...] = (ColorSpace.LAB, ColorSpace.HSV, ColorSpace.YUV)
    seed: int = 0
    augment: bool = True
    augment_saturation: tuple[float, float] = (0.7, 1.3)
    augment_brightness: tuple[float, float] = (-0.1, 0.1)
    checkpoint_every: int = 500
    reduction: str = "mean"
    encoder_stage_channels: tuple[int, int, int, int] = (128, 128, 64, 64)
    encoder_backbone_widths: tuple[int, int, int, int] = (16, 32, 64, 128)
    num_queries: int = 100
    decoder_heads: int = 4
    decoder_rounds: int = 3
    decoder_feature_scales: tuple[int, ...] = (1, 2, 3)
    fusion_kernels: tuple[int, int] = (1, 3)
    fusion_repeats: tuple[int, int, int, int] = (1, 1, 1, 1)
    disc_layers: int = 3
    disc_channels: int = 16
    loss_weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.image_size % 16:
            raise ValueError("image_size must be divisible by 16")
        self.color_spaces = tuple(ColorSpace(s) for s in self.color_spaces)
        if not self.color_spaces:
            raise ValueError("at least one color space is required")
        if len(set(self.color_spaces)) != len(self.color_spaces):
            raise ValueError("color spaces must be unique")
        if self.lr_milestones is not None:
            ms = tuple(self.lr_milestones)
            if any(b <= a for a, b in zip(ms, ms[1:])):
                raise ValueError("lr_milestones must be strictly increasing")
            self.lr_milestones = ms

    def milestones(self) -> tuple[int, ...]:
        """Iterations at which the learning rate is multiplied by lr_decay."""
        if self.lr_milestones is not None:
            return self.lr_milestones
        return tuple(
            range(self.lr_decay_start, max(self.iterations, 0) + 1, self.lr_decay_interval)
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            stage_channels=self.encoder_stage_channels,
            backbone_widths=self.encoder_backbone_widths,
        )

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(
            num_queries=self.num_queries,
            embed_dim=self.encoder_stage_channels[3],
            heads=self.decoder_heads,
            num_rounds=self.decoder_rounds,
            feature_scales=self.decoder_feature_scales,
        )

    def fusion_config(self) -> FusionConfig:
        return FusionConfig(
            num_spaces=len(self.color_spaces),
            kernel_sizes=self.fusion_kernels,
            repeats=self.fusion_repeats,
        )

    def discriminator_config(self) -> PatchDiscriminatorConfig:
        return PatchDiscriminatorConfig(
            num_layers=self.disc_layers, base_channels=self.disc_channels
        )


def color_augment(
    img: np.ndarray,
    seed: int,
    saturation: tuple[float, float] = (0.7, 1.3),
    brightness: tuple[float, float] = (-0.1, 0.1),
) -> np.ndarray:
    """Seeded saturation/brightness jitter; identity when both ranges collapse."""
    rgb = check_rgb_image(img)
    rng = np.random.default_rng(seed)
    sat = rng.uniform(*saturation)
    shift = rng.uniform(*brightness)
    if sat == 1.0 and shift == 0.0:
        return rgb
    luma = bt601_luma(rgb)[..., None]
    return np.clip(luma + sat * (rgb - luma) + shift, 0.0, 1.0)


@dataclass
class TrainingRun:
    iterations_completed: int
    reports: list[LossReport]
    checkpoint_path: Path | None
    curve_path: Path | None


class Trainer:
    """Owns the generator, discriminator, optimizers and RNG streams."""

    def __init__(self, cfg: TrainConfig, device: str = "cpu"):
        self.cfg = cfg
        self.device = torch.device(device)
        self.iteration = 0
        torch.manual_seed(cfg.seed)
        self.generator = ColorizationGenerator(
            cfg.color_spaces, cfg.encoder_config(), cfg.decoder_config(), cfg.fusion_config()
        ).to(self.device)
        self.discriminator = PatchDiscriminator(cfg.discriminator_config()).to(self.device)
        self.perceptual = FixedPerceptualExtractor(seed=cfg.seed).to(self.device)
        fusion_params = list(self.generator.fusion.parameters())
        fusion_ids = {id(p) for p in fusion_params}
        backbone_params = [p for p in self.generator.parameters() if id(p) not in fusion_ids]
        self.gen_opt = torch.optim.AdamW(
            [
                {"params": backbone_params},
                {"params": fusion_params, "lr": cfg.learning_rate * cfg.fusion_lr_scale},
            ],
            lr=cfg.learning_rate,
            betas=cfg.betas,
            weight_decay=cfg.weight_decay,
        )
        self.disc_opt = torch.optim.AdamW(
            self.discriminator.parameters(),
            lr=cfg.learning_rate * cfg.disc_lr_scale,
            betas=cfg.betas,
            weight_decay=cfg.weight_decay,
        )
        milestones = list(cfg.milestones())
        self.gen_sched = torch.optim.lr_scheduler.MultiStepLR(
            self.gen_opt, milestones=milestones, gamma=cfg.lr_decay
        )
        self.disc_sched = torch.optim.lr_scheduler.MultiStepLR(
            self.disc_opt, milestones=milestones, gamma=cfg.lr_decay
        )
        seq = np.random.SeedSequence(cfg.seed)
        data_seed, aug_seed = seq.spawn(2)
        self._data_rng = np.random.default_rng(data_seed)
        self._aug_rng = np.random.default_rng(aug_seed)
        self._queue: list[int] = []

    # -- data handling -------------------------------------------------

    def _targets(self, batch: np.ndarray):
        """Gray input plus per-space normalized chroma targets as tensors."""
        gray_np = np.stack([bt601_luma(img) for img in batch])
        gray = torch.from_numpy(gray_np).float().unsqueeze(1).to(self.device)
        rgb = torch.from_numpy(batch.transpose(0, 3, 1, 2)).float().to(self.device)
        pairs = {}
        for space in self.cfg.color_spaces:
            stacked = np.stack(
                [extract_color_channels(img, space).channels for img in batch]
            ).transpose(0, 3, 1, 2)
            pairs[space] = torch.from_numpy(stacked).float().to(self.device)
        return gray, rgb, pairs

    def _next_batch(self, source) -> np.ndarray:
        imgs = []
        while len(imgs) < self.cfg.batch_size:
            if not self._queue:
                if len(source) == 0:
                    raise ValueError("image source is empty")
                self._queue = list(self._data_rng.permutation(len(source)))
            idx = self._queue.pop(0)
            if idx >= len(source):
                continue  # source shrank after a repair
            try:
                img = source.load(idx)
            except CorruptImageError:
                self._queue = [i for i in self._queue if i < len(source)]
                continue
            if self.cfg.augment:
                img = color_augment(
                    img,
                    int(self._aug_rng.integers(0, 2**31 - 1)),
                    self.cfg.augment_saturation,
                    self.cfg.augment_brightness,
                )
            imgs.append(img)
        return np.stack(imgs)

    # -- optimization --------------------------------------------------

    def train_step(self, batch: np.ndarray) -> LossReport:
        """One discriminator update followed by one generator update."""
        batch = check_image_batch(batch)
        cfg = self.cfg
        w = cfg.loss_weights
        gray, rgb_gt, pairs_gt = self._targets(batch)
        self.generator.train()
        self.discriminator.train()

        fake_rgb, pairs_pred = self.generator(gray)

        use_adversary = w.adversarial > 0.0
        if use_adversary:
            self.disc_opt.zero_grad()
            d_real = self.discriminator(rgb_gt)
            d_fake = self.discriminator(fake_rgb.detach())
            _, disc_loss = L.adversarial_losses(d_real, d_fake)
            disc_loss.backward()
            self.disc_opt.step()
            self.disc_sched.step()

        self.gen_opt.zero_grad()
        cc = L.color_channel_loss(pairs_pred, pairs_gt, w, reduction=cfg.reduction)
        per = L.perceptual_loss(fake_rgb, rgb_gt, self.perceptual, w)
        cf = L.colorfulness_loss(fake_rgb)
        if use_adversary:
            adv_g, _ = L.adversarial_losses(
                d_real.detach(), self.discriminator(fake_rgb)
            )
            adv_d = float(disc_loss.detach())
        else:
            adv_g = torch.zeros((), device=self.device)
            adv_d = 0.0
        total, report = L.total_loss(cc, per, adv_g, cf, w, adv_discriminator=adv_d)
        total.backward()
        self.gen_opt.step()
        self.gen_sched.step()
        self.iteration += 1
        return report

    def run(self, source, out_dir=None) -> TrainingRun:
        """Train for cfg.iterations over a cyclically sampled image source."""
        if len(source) == 0:
            raise ValueError("image source is empty")
        out = Path(out_dir) if out_dir is not None else None
        curve_path = None
        csv_file = None
        writer = None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            curve_path = out / "loss_curve.csv"
            csv_file = open(curve_path, "w", newline="")
            writer = csv.writer(csv_file)
            writer.writerow(["iteration"] + LossReport.field_names())
        reports: list[LossReport] = []
        try:
            while self.iteration < self.cfg.iterations:
                batch = self._next_batch(source)
                report = self.train_step(batch)
                reports.append(report)
                if writer is not None:
                    writer.writerow(
                        [self.iteration] + [repr(v) for v in report.as_dict().values()]
                    )
                if (
                    out is not None
                    and self.cfg.checkpoint_every > 0
                    and self.iteration % self.cfg.checkpoint_every == 0
                ):
                    self.save_checkpoint(out / f"checkpoint_{self.iteration:06d}.pt")
        finally:
            if csv_file is not None:
                csv_file.close()
        ckpt_path = None
        if out is not None:
            ckpt_path = out / "checkpoint_final.pt"
            self.save_checkpoint(ckpt_path)
        return TrainingRun(self.iteration, reports, ckpt_path, curve_path)

    # -- inference -----------------------------------------------------

    def colorize(self, gray: np.ndarray) -> np.ndarray:
        """Colorize gray images (H, W) or (B, H, W); returns (..., 3) arrays."""
        single = gray.ndim == 2
        arr = np.asarray(gray, dtype=np.float64)
        if single:
            arr = arr[None]
        if arr.ndim != 3:
            raise ValueError(f"expected (H, W) or (B, H, W) gray input, got {arr.shape}")
        self.generator.eval()
        with torch.no_grad():
            tensor = torch.from_numpy(arr).float().unsqueeze(1).to(self.device)
            rgb, _ = self.generator(tensor)
        out = rgb.cpu().numpy().transpose(0, 2, 3, 1).astype(np.float64)
        return out[0] if single else out

    def predict_pairs(self, gray: np.ndarray) -> dict[ColorSpace, np.ndarray]:
        """Per-space normalized chroma predictions for a gray batch (B, H, W)."""
        self.generator.eval()
        with torch.no_grad():
            tensor = torch.from_numpy(np.asarray(gray, dtype=np.float64)).float()
            tensor = tensor.unsqueeze(1).to(self.device)
            _, pairs = self.generator(tensor)
        return {s: p.cpu().numpy().transpose(0, 2, 3, 1) for s, p in pairs.items()}

    # -- persistence ---------------------------------------------------

    def save_checkpoint(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format_version": CHECKPOINT_FORMAT_VERSION,
                "config": self.cfg,
                "iteration": self.iteration,
                "generator": self.generator.state_dict(),
                "discriminator": self.discriminator.state_dict(),
                "gen_optimizer": self.gen_opt.state_dict(),
                "disc_optimizer": self.disc_opt.state_dict(),
                "gen_scheduler": self.gen_sched.state_dict(),
                "disc_scheduler": self.disc_sched.state_dict(),
                "torch_rng": torch.get_rng_state(),
                "data_rng": self._data_rng.bit_generator.state,
                "aug_rng": self._aug_rng.bit_generator.state,
                "queue": list(self._queue),
            },
            path,
        )
        return path

    @classmethod
    def from_checkpoint(cls, path, device: str = "cpu") -> "Trainer":
        payload = torch.load(Path(path), map_location=device, weights_only=False)
        version = payload.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version!r}")
        trainer = cls(payload["config"], device=device)
        trainer.generator.load_state_dict(payload["generator"])
        trainer.discriminator.load_state_dict(payload["discriminator"])
        trainer.gen_opt.load_state_dict(payload["gen_optimizer"])
        trainer.disc_opt.load_state_dict(payload["disc_optimizer"])
        trainer.gen_sched.load_state_dict(payload["gen_scheduler"])
        trainer.disc_sched.load_state_dict(payload["disc_scheduler"])
        trainer.iteration = payload["iteration"]
        torch.set_rng_state(payload["torch_rng"])
        trainer._data_rng.bit_generator.state = payload["data_rng"]
        trainer._aug_rng.bit_generator.state = payload["aug_rng"]
        trainer._queue = list(payload["queue"])
        return trainer
