"""Unsupervised reference estimators: Gray-world, SDWGW and Shades-of-gray."""

from __future__ import annotations

import math

import numpy as np

from .errors import EstimationError
from .image import LinearImage, PixelMask, resolve_mask


def _valid_pixels(data: np.ndarray, excluded: np.ndarray) -> np.ndarray:
    if excluded.any():
        return data[~excluded]
    return data.reshape(-1, 3)


def _channel_means(pixels: np.ndarray) -> np.ndarray:
    if len(pixels) == 0:
        raise EstimationError("no unmasked pixels")
    return pixels.mean(axis=0)


def gray_world(img: LinearImage, mask: PixelMask | None = None) -> np.ndarray:
    """Per-channel mean over unmasked pixels."""
    excluded = resolve_mask(img, mask)
    return _channel_means(_valid_pixels(img.data, excluded))


def shades_of_gray(img: LinearImage, mask: PixelMask | None = None,
                   p: float = 6.0) -> np.ndarray:
    """Minkowski p-mean of each channel; p=1 is Gray-world, large p tends to max-RGB."""
    if not p >= 1:
        raise ValueError("Minkowski norm p must be >= 1")
    excluded = resolve_mask(img, mask)
    pixels = _valid_pixels(img.data, excluded)
    if p == 1:
        return _channel_means(pixels)
    return _channel_means(pixels ** p) ** (1.0 / p)


def sd_weighted_mean(means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    """Combine block means per channel with weights proportional to block std.

    ``means`` and ``stds`` are ``(B, 3)``. Channels whose deviations are all
    zero come back as NaN for the caller to replace.
    """
    total = stds.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        weights = stds / total
    return (weights * means).sum(axis=0)


def _block_edges(length: int, count: int) -> np.ndarray:
    return np.linspace(0, length, count + 1).round().astype(int)


def sdwgw(img: LinearImage, mask: PixelMask | None = None,
          num_blocks: int = 100) -> np.ndarray:
    """Standard-deviation-weighted Gray-world over a square grid of blocks."""
    if num_blocks < 1:
        raise ValueError("number of blocks must be >= 1")
    side = math.ceil(math.sqrt(num_blocks))
    if img.height < side or img.width < side:
        raise ValueError(f"image too small for a {side}x{side} block grid")
    excluded = resolve_mask(img, mask)
    fallback = gray_world(img, mask)
    row_edges = _block_edges(img.height, side)
    col_edges = _block_edges(img.width, side)
    means, stds = [], []
    for r0, r1 in zip(row_edges[:-1], row_edges[1:]):
        for c0, c1 in zip(col_edges[:-1], col_edges[1:]):
            block = _valid_pixels(img.data[r0:r1, c0:c1], excluded[r0:r1, c0:c1])
            if len(block) == 0:
                continue
            means.append(_channel_means(block))
            stds.append(block.std(axis=0))
    e = sd_weighted_mean(np.array(means), np.array(stds))
    return np.where(np.isnan(e), fallback, e)
