"""Linear RGB images, exclusion masks, PNG I/O, box blur and von Kries correction."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import cv2
import numpy as np
from scipy import ndimage

from .errors import ImageIOError

# Floor applied to intensities wherever they are divided by one another, so
# ratios stay finite on black pixels and exactly scale-invariant above it.
EPS = 1.0 / 65535.0


@dataclass(frozen=True)
class LinearImage:
    """Immutable H x W x 3 float64 raster of linear RGB intensities.

    Values are nominally in [0, 1]; ``bit_depth_origin`` records the integer
    depth the data was decoded from (0 for synthetic images).
    """

    data: np.ndarray
    bit_depth_origin: int = 0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True, order="C")
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected an H x W x 3 array, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ValueError("intensities must be finite and non-negative")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def _adopt(cls, data: np.ndarray, bit_depth_origin: int) -> "LinearImage":
        # Takes ownership of a freshly decoded float64 array; skips copy and checks.
        img = object.__new__(cls)
        data.flags.writeable = False
        object.__setattr__(img, "data", data)
        object.__setattr__(img, "bit_depth_origin", bit_depth_origin)
        return img

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    def scaled(self, factor: float) -> "LinearImage":
        return LinearImage(self.data * factor, self.bit_depth_origin)


@dataclass(frozen=True)
class PixelMask:
    """Boolean H x W raster; True marks pixels excluded from estimation."""

    excluded: np.ndarray

    def __post_init__(self):
        excluded = np.array(self.excluded, dtype=bool, copy=True, order="C")
        if excluded.ndim != 2:
            raise ValueError("mask must be two-dimensional")
        excluded.flags.writeable = False
        object.__setattr__(self, "excluded", excluded)

    @classmethod
    def empty(cls, height: int, width: int) -> "PixelMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_rects(cls, height: int, width: int,
                   rects: Iterable[Sequence[int]]) -> "PixelMask":
        """Build a mask from ``(x, y, w, h)`` rectangles (x is the column)."""
        excluded = np.zeros((height, width), dtype=bool)
        for x, y, w, h in rects:
            if w < 1 or h < 1 or x < 0 or y < 0 or x + w > width or y + h > height:
                raise ValueError(
                    f"mask rectangle {(x, y, w, h)} outside {width}x{height} image")
            excluded[y:y + h, x:x + w] = True
        return cls(excluded)

    @property
    def shape(self) -> tuple[int, int]:
        return self.excluded.shape

    def check_matches(self, img: LinearImage) -> None:
        if self.shape != img.shape:
            raise ValueError(
                f"mask shape {self.shape} does not match image shape {img.shape}")


def resolve_mask(img: LinearImage, mask: PixelMask | None) -> np.ndarray:
    """Return the boolean exclusion array for ``img`` (all False when no mask)."""
    if mask is None:
        return np.zeros(img.shape, dtype=bool)
    mask.check_matches(img)
    return mask.excluded


def load_png(path: str | os.PathLike) -> LinearImage:
    """Decode an 8- or 16-bit RGB PNG into a normalized LinearImage."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ImageIOError(f"no such file: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"cannot decode image: {path}")
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise ImageIOError(f"not an RGB image: {path}")
    if raw.dtype == np.uint8:
        depth = 8
    elif raw.dtype == np.uint16:
        depth = 16
    else:
        raise ImageIOError(f"unsupported sample type {raw.dtype}: {path}")
    if raw.shape[0] == 0 or raw.shape[1] == 0:
        raise ImageIOError(f"zero-sized image: {path}")
    data = np.empty(raw.shape, dtype=np.float64)
    np.multiply(raw[:, :, ::-1], 1.0 / float(2 ** depth - 1), out=data)
    return LinearImage._adopt(data, depth)


# Kept under the name used by the dataset tooling.
load_png16 = load_png


def to_integer(img: LinearImage, bit_depth: int = 16) -> np.ndarray:
    """Quantize to unsigned integers, clipping to [0, 1] first."""
    if bit_depth not in (8, 16):
        raise ValueError("bit depth must be 8 or 16")
    top = 2 ** bit_depth - 1
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    return np.rint(np.clip(img.data, 0.0, 1.0) * top).astype(dtype)


def save_png(img: LinearImage, path: str | os.PathLike, bit_depth: int | None = None) -> None:
    """Write ``img`` as an RGB PNG (16-bit unless the image came from 8-bit data)."""
    if bit_depth is None:
        bit_depth = 8 if img.bit_depth_origin == 8 else 16
    codes = to_integer(img, bit_depth)
    path = os.fspath(path)
    try:
        ok = cv2.imwrite(path, np.ascontiguousarray(codes[:, :, ::-1]))
    except cv2.error as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
    if not ok:
        raise ImageIOError(f"cannot write {path}")


def check_kernel_size(size: int) -> int:
    if size != int(size) or size < 1:
        raise ValueError("kernel size must be a positive odd integer")
    if size % 2 == 0:
        raise ValueError("kernel size must be odd")
    return int(size)


def box_blur(img: LinearImage, size: int) -> LinearImage:
    """Average every channel over a ``size`` x ``size`` window.

    Borders replicate the edge pixels, so constant images stay constant.
    """
    size = check_kernel_size(size)
    if size > 2 * min(img.shape) - 1:
        raise ValueError(
            f"kernel size {size} too large for {img.width}x{img.height} image")
    if size == 1:
        return img
    out = ndimage.uniform_filter(img.data, size=(size, size, 1), mode="nearest")
    np.maximum(out, 0.0, out=out)
    return LinearImage(out, img.bit_depth_origin)


def diagonal_correct(img: LinearImage, estimate, target=(1.0, 1.0, 1.0)) -> LinearImage:
    """Discount the estimated illuminant with per-channel (von Kries) gains.

    Gains ``target_c / estimate_c`` are rescaled so the largest is 1, then the
    result is clipped to [0, 1].
    """
    e = np.asarray(estimate, dtype=np.float64)
    g = np.asarray(target, dtype=np.float64)
    if e.shape != (3,) or g.shape != (3,):
        raise ValueError("estimate and target must be 3-vectors")
    if np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise ValueError("illuminant estimate components must be strictly positive")
    if np.any(g <= 0):
        raise ValueError("target illuminant components must be strictly positive")
    gains = g / e
    gains /= gains.max()
    out = np.clip(img.data * gains, 0.0, 1.0)
    return LinearImage(out, img.bit_depth_origin)
