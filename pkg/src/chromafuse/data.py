"""Dataset ingestion: image folders to resized RGB, gray and chroma targets.

Images are stored as 8-bit PNG/JPEG on disk and converted to float via
value/255 (round-to-nearest on write). Grayscale is BT.601 luma, so the
gray image equals the YUV brightness channel of the sample exactly.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .colorspace import ChannelPair, ColorSpace, bt601_luma, extract_color_channels
from .validation import check_rgb_image

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}

DEFAULT_SPACES = (ColorSpace.LAB, ColorSpace.HSV, ColorSpace.YUV)


class CorruptImageError(RuntimeError):
    """Raised after an undecodable file was dropped from the manifest."""


def save_png(path, img: np.ndarray) -> None:
    """Write a [0, 1] float image as 8-bit PNG (round-to-nearest)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    data = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    if data.shape[2] == 1:
        data = data[:, :, 0]
    Image.fromarray(data).save(Path(path))


def load_image(path) -> np.ndarray:
    """Read any PIL-decodable image as an H x W x 3 float array in [0, 1]."""
    with Image.open(Path(path)) as im:
        rgb = im.convert("RGB")
        return np.asarray(rgb, dtype=np.float64) / 255.0


def resize_rgb(img: np.ndarray, size: tuple[int, int], antialias: bool = False) -> np.ndarray:
    """Bilinear resize to (height, width); antialiasing off by default."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.shape[:2] == tuple(size):
        return arr.copy()
    tensor = torch.from_numpy(arr.transpose(2, 0, 1)).unsqueeze(0)
    out = F.interpolate(
        tensor, size=tuple(size), mode="bilinear", align_corners=False, antialias=antialias
    )
    return np.clip(out.squeeze(0).numpy().transpose(1, 2, 0), 0.0, 1.0)


@dataclass
class DatasetManifest:
    """Deterministic file list with a train/validation split assignment."""

    root: str
    train_files: list[str] = field(default_factory=list)
    val_files: list[str] = field(default_factory=list)
    target_size: tuple[int, int] = (64, 64)
    file_hash: str = ""

    def __post_init__(self):
        overlap = set(self.train_files) & set(self.val_files)
        if overlap:
            raise ValueError(f"splits overlap: {sorted(overlap)[:3]}")

    def files(self, split: str) -> list[str]:
        if split == "train":
            return self.train_files
        if split == "val":
            return self.val_files
        raise ValueError(f"unknown split {split!r}")

    def path(self, split: str, index: int) -> Path:
        return Path(self.root) / self.files(split)[index]

    def remove(self, relpath: str) -> None:
        for bucket in (self.train_files, self.val_files):
            if relpath in bucket:
                bucket.remove(relpath)

    def to_json(self) -> str:
        return json.dumps(
            {
                "root": self.root,
                "train_files": self.train_files,
                "val_files": self.val_files,
                "target_size": list(self.target_size),
                "file_hash": self.file_hash,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        raw = json.loads(text)
        return cls(
            root=raw["root"],
            train_files=list(raw["train_files"]),
            val_files=list(raw["val_files"]),
            target_size=tuple(raw["target_size"]),
            file_hash=raw.get("file_hash", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text())


def _hash_file_list(files: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(sorted(files)).encode()).hexdigest()


def build_manifest(
    root,
    split_ratio: float = 0.9,
    seed: int = 0,
    target_size: tuple[int, int] = (64, 64),
) -> DatasetManifest:
    """Scan a folder, shuffle deterministically, split train/validation."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    if not 0.0 < split_ratio <= 1.0:
        raise ValueError("split_ratio must be in (0, 1]")
    files = sorted(
        str(p.relative_to(root))
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if not files:
        raise ValueError(f"no images found under {root}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(files))
    shuffled = [files[i] for i in order]
    cut = round(len(shuffled) * split_ratio)
    return DatasetManifest(
        root=str(root),
        train_files=shuffled[:cut],
        val_files=shuffled[cut:],
        target_size=tuple(target_size),
        file_hash=_hash_file_list(files),
    )


def load_sample(
    manifest: DatasetManifest,
    index: int,
    spaces: Sequence[ColorSpace] = DEFAULT_SPACES,
    split: str = "train",
    antialias: bool = False,
) -> tuple[np.ndarray, np.ndarray, dict[ColorSpace, ChannelPair]]:
    """One sample: resized RGB, its gray image, and per-space chroma targets.

    An undecodable file is dropped from the manifest with a warning and
    reported via :class:`CorruptImageError` so callers can resample.
    """
    files = manifest.files(split)
    if not 0 <= index < len(files):
        raise IndexError(f"index {index} out of range for {len(files)} {split} files")
    path = manifest.path(split, index)
    try:
        raw = load_image(path)
    except Exception as exc:
        warnings.warn(f"dropping undecodable image {path}: {exc}")
        manifest.remove(files[index])
        raise CorruptImageError(str(path)) from exc
    rgb = check_rgb_image(resize_rgb(raw, manifest.target_size, antialias=antialias))
    gray = bt601_luma(rgb)
    pairs = {ColorSpace(s): extract_color_channels(rgb, s) for s in spaces}
    return rgb, gray, pairs


class ManifestImageSource:
    """Iterable RGB access over one split of a manifest."""

    def __init__(self, manifest: DatasetManifest, split: str = "train", antialias: bool = False):
        self.manifest = manifest
        self.split = split
        self.antialias = antialias

    def __len__(self) -> int:
        return len(self.manifest.files(self.split))

    def load(self, index: int) -> np.ndarray:
        files = self.manifest.files(self.split)
        path = self.manifest.path(self.split, index)
        try:
            raw = load_image(path)
        except Exception as exc:
            warnings.warn(f"dropping undecodable image {path}: {exc}")
            self.manifest.remove(files[index])
            raise CorruptImageError(str(path)) from exc
        return resize_rgb(raw, self.manifest.target_size, antialias=self.antialias)


class ArrayImageSource:
    """RGB access over in-memory images, resized to a common target size."""

    def __init__(self, images: Sequence[np.ndarray], target_size: tuple[int, int]):
        if len(images) == 0:
            raise ValueError("image list is empty")
        self.images = [check_rgb_image(img) for img in images]
        self.target_size = tuple(target_size)

    def __len__(self) -> int:
        return len(self.images)

    def load(self, index: int) -> np.ndarray:
        return resize_rgb(self.images[index], self.target_size)


def generate_demo_corpus(path, count: int = 16, size: int = 64, seed: int = 0) -> list[Path]:
    """Write a small deterministic corpus of smooth, colorful PNGs."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    written = []
    for i in range(count):
        coarse = rng.random((4, 4, 3))
        img = resize_rgb(coarse, (size, size))
        tint = np.stack([yy, xx, 1.0 - yy], axis=-1)
        mix = rng.uniform(0.25, 0.55)
        img = np.clip((1.0 - mix) * img + mix * tint, 0.0, 1.0)
        target = out / f"demo_{i:03d}.png"
        save_png(target, img)
        written.append(target)
    return written
