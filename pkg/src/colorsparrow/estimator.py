"""Color Sparrow: a global illuminant estimate from sparse RSR local changes.

At every sampled pixel the local intensity change ``p`` is the ratio of the
original intensity to its RSR lightness, optionally with both images box
averaged over a small window first. The global estimate is the sum of these
vectors (or of their unit directions). RSR is evaluated only inside the
windows of sampled pixels, never over the whole image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError
from .image import EPS, LinearImage, PixelMask, check_kernel_size, resolve_mask
from .rsr import SprayParams, lightness_at

WEIGHTINGS = ("weighted", "unit")


def _default_spray() -> SprayParams:
    return SprayParams(num_sprays=1, points_per_spray=225)


@dataclass(frozen=True)
class CsParams:
    spray: SprayParams = field(default_factory=_default_spray)
    kernel_size: int = 5
    row_step: int = 50
    col_step: int = 50
    weighting: str = "weighted"

    def __post_init__(self):
        check_kernel_size(self.kernel_size)
        if int(self.row_step) != self.row_step or self.row_step < 1:
            raise ValueError("row step must be a positive integer")
        if int(self.col_step) != self.col_step or self.col_step < 1:
            raise ValueError("column step must be a positive integer")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")

    @property
    def seed(self) -> int:
        return self.spray.seed


@dataclass(frozen=True)
class LocalChange:
    position: tuple[int, int]
    p: np.ndarray

    @property
    def w(self) -> float:
        return float(_norms(self.p[None, :])[0])


def _norms(p: np.ndarray) -> np.ndarray:
    # Sorting the squares makes the norm independent of channel order.
    return np.sqrt(np.sort(p * p, axis=1).sum(axis=1))


def sample_grid(dims, mask: PixelMask | None, row_step: int, col_step: int) -> np.ndarray:
    """Rows 0, r, 2r, ... crossed with columns 0, c, 2c, ...; masked pixels dropped.

    Returns an ``(K, 2)`` int array of ``(row, col)`` in row-major order.
    """
    if row_step < 1 or col_step < 1:
        raise ValueError("row and column steps must be >= 1")
    height, width = int(dims[0]), int(dims[1])
    rows, cols = np.meshgrid(np.arange(0, height, row_step),
                             np.arange(0, width, col_step), indexing="ij")
    grid = np.stack([rows.ravel(), cols.ravel()], axis=1).astype(np.int64)
    if mask is not None:
        if mask.shape != (height, width):
            raise ValueError("mask shape does not match image dimensions")
        grid = grid[~mask.excluded[grid[:, 0], grid[:, 1]]]
    return grid


def _window(rows: np.ndarray, cols: np.ndarray, size: int, shape) -> tuple[np.ndarray, np.ndarray]:
    half = size // 2
    offsets = np.arange(-half, half + 1)
    dr = np.repeat(offsets, size)
    dc = np.tile(offsets, size)
    wr = np.clip(rows[:, None] + dr[None, :], 0, shape[0] - 1)
    wc = np.clip(cols[:, None] + dc[None, :], 0, shape[1] - 1)
    return wr, wc


def local_changes(img: LinearImage, positions, params: CsParams,
                  mask: PixelMask | None = None) -> np.ndarray:
    """Local intensity change vectors ``p`` at ``positions``, shape ``(K, 3)``.

    ``p = max(mean I, eps) / mean R`` over the clamped window. A constant image
    gives back its own colour and, with a 1x1 window and one spray, ``p`` is
    the spray maximum.
    """
    positions = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
    size = check_kernel_size(params.kernel_size)
    wr, wc = _window(positions[:, 0], positions[:, 1], size, img.shape)
    light = lightness_at(img, wr.ravel(), wc.ravel(), params.spray, mask)
    light = light.reshape(len(positions), size * size, 3)
    inten = img.data[wr, wc]
    return np.maximum(inten.mean(axis=1), EPS) / light.mean(axis=1)


def local_change(img: LinearImage, pixel, params: CsParams,
                 mask: PixelMask | None = None) -> LocalChange:
    row, col = int(pixel[0]), int(pixel[1])
    if not (0 <= row < img.height and 0 <= col < img.width):
        raise ValueError(f"pixel {pixel} outside image")
    p = local_changes(img, [(row, col)], params, mask)[0]
    return LocalChange((row, col), p)


def aggregate(p: np.ndarray, weighting: str = "weighted") -> np.ndarray:
    """Sum local changes into one (unnormalized) illuminant vector."""
    if weighting == "weighted":
        e = p.sum(axis=0)
    elif weighting == "unit":
        w = _norms(p)
        keep = w > 0
        e = (p[keep] / w[keep, None]).sum(axis=0)
    else:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    if not np.any(e > 0):
        raise EstimationError("accumulated illuminant estimate is zero")
    return e


def estimate(img: LinearImage, mask: PixelMask | None = None,
             params: CsParams | None = None) -> np.ndarray:
    """Color Sparrow illuminant estimate; only its direction is meaningful.

    Excluded pixels are never sampled and never act as spray points.
    """
    if params is None:
        params = CsParams()
    resolve_mask(img, mask)
    positions = sample_grid(img.shape, mask, params.row_step, params.col_step)
    if len(positions) == 0:
        raise EstimationError("no unmasked pixels on the sampling grid")
    p = local_changes(img, positions, params, mask)
    return aggregate(p, params.weighting)
