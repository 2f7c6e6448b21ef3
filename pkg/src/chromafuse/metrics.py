"""Evaluation metrics: PSNR, colorfulness statistics, Fréchet distance.

The Fréchet distance runs on embedding vectors from any injected network;
the bundled frozen embedder yields internally consistent numbers that are
not comparable to Inception-based published scores.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .losses import colorfulness_score
from .validation import check_rgb_image


def psnr(pred: np.ndarray, gt: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB on [0, 1] images; inf on exact match."""
    a = check_rgb_image(pred, "prediction")
    b = check_rgb_image(gt, "ground truth")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def image_colorfulness(img: np.ndarray) -> float:
    """Colorfulness of one H x W x 3 image (numpy front end to the loss term)."""
    arr = check_rgb_image(img)
    tensor = torch.from_numpy(arr.transpose(2, 0, 1))
    return float(colorfulness_score(tensor))


def cf_of_set(imgs: Sequence[np.ndarray]) -> float:
    """Mean per-image colorfulness over a nonempty set."""
    imgs = list(imgs)
    if not imgs:
        raise ValueError("image set is empty")
    return float(np.mean([image_colorfulness(i) for i in imgs]))


def delta_cf(preds: Sequence[np.ndarray], gts: Sequence[np.ndarray]) -> float:
    """Absolute colorfulness gap between two image sets."""
    return abs(cf_of_set(preds) - cf_of_set(gts))


def _sqrtm_psd(mat: np.ndarray, floor: float) -> tuple[np.ndarray, bool]:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    floored = bool((vals < -1e-8).any())
    vals = np.maximum(vals, floor)
    return (vecs * np.sqrt(vals)) @ vecs.T, floored


def frechet_distance(
    feats_a: np.ndarray, feats_b: np.ndarray, eigenvalue_floor: float = 1e-10
) -> float:
    """Fréchet distance between Gaussian fits of two embedding sets.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), computed with a
    symmetric matrix square root. Covariances use the unbiased estimator;
    eigenvalues are floored, and a materially negative spectrum (a failed
    square root) is reported as a warning.
    """
    a = np.asarray(feats_a, dtype=np.float64)
    b = np.asarray(feats_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("feature sets must be 2-D (n_samples, dim)")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("need at least 2 feature vectors per set")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")

    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False)
    cov_b = np.cov(b, rowvar=False)
    cov_a = np.atleast_2d(cov_a)
    cov_b = np.atleast_2d(cov_b)

    sqrt_a, f1 = _sqrtm_psd(cov_a, eigenvalue_floor)
    inner, f2 = _sqrtm_psd(sqrt_a @ cov_b @ sqrt_a, eigenvalue_floor)
    if f1 or f2:
        warnings.warn("matrix square root had negative eigenvalues; floor applied")
    dist = float(
        np.sum((mu_a - mu_b) ** 2) + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(inner)
    )
    return max(dist, 0.0)


def embed_images(
    imgs: Sequence[np.ndarray], embedder: torch.nn.Module, batch_size: int = 32
) -> np.ndarray:
    """Run the embedder over H x W x 3 images, returning (n, dim) features."""
    imgs = list(imgs)
    if not imgs:
        raise ValueError("image set is empty")
    feats = []
    with torch.no_grad():
        for start in range(0, len(imgs), batch_size):
            chunk = imgs[start : start + batch_size]
            batch = torch.stack(
                [torch.from_numpy(check_rgb_image(i).transpose(2, 0, 1)).float() for i in chunk]
            )
            feats.append(embedder(batch).cpu().numpy())
    return np.concatenate(feats, axis=0)


@dataclass
class MetricReport:
    psnr: float
    cf: float
    delta_cf: float
    fid: float | None = None

    def to_text(self) -> str:
        lines = [f"psnr={self.psnr!r}", f"cf={self.cf!r}", f"delta_cf={self.delta_cf!r}"]
        if self.fid is not None:
            lines.append(f"fid={self.fid!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MetricReport":
        values: dict[str, float] = {}
        for line in text.strip().splitlines():
            key, _, raw = line.partition("=")
            values[key.strip()] = float(raw)
        return cls(
            psnr=values["psnr"],
            cf=values["cf"],
            delta_cf=values["delta_cf"],
            fid=values.get("fid"),
        )


def evaluate_images(
    preds: Sequence[np.ndarray],
    gts: Sequence[np.ndarray],
    embedder: torch.nn.Module | None = None,
) -> MetricReport:
    """Full metric report for paired prediction/ground-truth sets.

    PSNR is averaged over pairs (an exact match propagates the inf
    sentinel); the Fréchet term is included when an embedder is supplied.
    """
    preds, gts = list(preds), list(gts)
    if len(preds) != len(gts) or not preds:
        raise ValueError("prediction and ground-truth sets must be nonempty and equal length")
    psnr_mean = float(np.mean([psnr(p, g) for p, g in zip(preds, gts)]))
    cf = cf_of_set(preds)
    dcf = abs(cf - cf_of_set(gts))
    fid = None
    if embedder is not None:
        fid = frechet_distance(embed_images(preds, embedder), embed_images(gts, embedder))
    return MetricReport(psnr=psnr_mean, cf=cf, delta_cf=dcf, fid=fid)
