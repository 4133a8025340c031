"""Synthetic Mondrian scenes with a known illuminant, for tests and benchmarks."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .image import LinearImage, save_png


@dataclass
class Scene:
    image: LinearImage
    illuminant: np.ndarray
    mask_rects: list[tuple[int, int, int, int]]


def random_illuminant(rng: np.random.Generator) -> np.ndarray:
    """Components uniform in [0.5, 1], so every pairwise ratio lies in [0.5, 2]."""
    return rng.uniform(0.5, 1.0, size=3)


def mondrian(height: int, width: int, illuminant, rng: np.random.Generator,
             num_rects: int = 60, white_fraction: float = 0.03,
             noise: float = 0.005, checker: bool = False) -> Scene:
    """Random coloured rectangles plus one near-white patch under ``illuminant``.

    Surface reflectances are drawn in [0.05, 0.7] per channel; the white patch
    has reflectance about 0.9 in every channel and covers ``white_fraction`` of
    the frame. With ``checker=True`` a saturated chart is pasted in and its
    rectangle is returned in ``mask_rects`` as ``(x, y, w, h)``.
    """
    illuminant = np.asarray(illuminant, dtype=np.float64)
    refl = np.empty((height, width, 3))
    refl[:] = rng.uniform(0.05, 0.7, size=3)
    for _ in range(num_rects):
        h = int(rng.integers(max(1, height // 12), max(2, height // 3)))
        w = int(rng.integers(max(1, width // 12), max(2, width // 3)))
        y = int(rng.integers(0, height - h + 1))
        x = int(rng.integers(0, width - w + 1))
        refl[y:y + h, x:x + w] = rng.uniform(0.05, 0.7, size=3)

    side_h = max(1, int(round(np.sqrt(white_fraction * height * width * height / width))))
    side_w = max(1, int(np.ceil(white_fraction * height * width / side_h)))
    side_h, side_w = min(side_h, height), min(side_w, width)
    y = int(rng.integers(0, height - side_h + 1))
    x = int(rng.integers(0, width - side_w + 1))
    refl[y:y + side_h, x:x + side_w] = 0.9 * rng.uniform(0.98, 1.0, size=3)

    rects = []
    if checker:
        ch, cw = max(2, height // 6), max(3, width // 6)
        cy = int(rng.integers(0, height - ch + 1))
        cx = int(rng.integers(0, width - cw + 1))
        chart = rng.uniform(0.0, 1.0, size=(2, 3, 3))
        chart[0, 0] = 1.0
        refl[cy:cy + ch, cx:cx + cw] = np.kron(
            chart, np.ones((-(-ch // 2), -(-cw // 3), 1)))[:ch, :cw]
        rects.append((cx, cy, cw, ch))

    data = refl * (illuminant / illuminant.max())
    if noise > 0:
        data *= 1.0 + noise * rng.standard_normal(data.shape)
    data = np.clip(data, 0.0, 1.0)
    return Scene(LinearImage(data), illuminant, rects)


def write_suite(directory, count: int, height: int = 120, width: int = 160,
                seed: int = 0, checker: bool = False, **kwargs) -> str:
    """Write ``count`` Mondrian PNGs and a manifest CSV; return the manifest path."""
    from .evaluation import ManifestEntry, write_manifest

    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(count):
        scene = mondrian(height, width, random_illuminant(rng), rng,
                         checker=checker, **kwargs)
        name = f"mondrian_{i:03d}.png"
        save_png(scene.image, os.path.join(directory, name))
        entries.append(ManifestEntry(name, tuple(scene.illuminant), scene.mask_rects))
    path = os.path.join(directory, "manifest.csv")
    write_manifest(entries, path)
    return path
