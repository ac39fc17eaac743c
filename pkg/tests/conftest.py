"""Shared fixtures: synthetic directory-per-class image corpora."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

# Saturated, visually distinct base colors; one per synthetic class.
CLASS_COLORS = [
    (255, 40, 40),
    (40, 200, 60),
    (60, 80, 255),
    (240, 200, 40),
    (200, 40, 220),
    (40, 220, 220),
]


def write_image(path: Path, rgb: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.clip(rgb, 0, 255).astype(np.uint8)).save(path)


def toy_image(size: int, hue, variant: int, rng) -> np.ndarray:
    """Smooth two-tone pattern mixing a class hue with a random color."""
    other = rng.uniform(0, 255, 3)
    yy, xx = np.mgrid[0:size, 0:size] / size
    phase = rng.uniform(0, 2 * np.pi)
    w = 0.5 + 0.5 * np.sin(2 * np.pi * (xx * (variant % 3 + 1) + yy * (variant % 2 + 1)) + phase)
    hue = np.asarray(hue, dtype=np.float64)
    return hue[None, None, :] * w[..., None] + other[None, None, :] * (1 - w[..., None])


def make_toy_dataset(root: Path, n_classes: int = 2, per_class: int = 3,
                     splits=("train", "val", "test"), size: int = 64, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    for split in splits:
        for ci in range(n_classes):
            for ii in range(per_class):
                img = toy_image(size, CLASS_COLORS[ci % len(CLASS_COLORS)], ii, rng)
                write_image(root / split / f"class{ci}" / f"img{ii}.png", img)
    return root


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory) -> Path:
    """2 classes x 3 images x 3 splits of 64px patterns."""
    return make_toy_dataset(tmp_path_factory.mktemp("toyds"))


@pytest.fixture(scope="session")
def overfit_dataset(tmp_path_factory) -> Path:
    """The fixed 16-image train-only set used by the overfit sanity runs."""
    return make_toy_dataset(tmp_path_factory.mktemp("overfit"), n_classes=4,
                            per_class=4, splits=("train",), size=64, seed=7)
