"""Random Sprays Retinex: spray sampling and per-pixel lightness.

Every spray draws from its own SplitMix64 stream keyed on
``(seed, row * width + col, spray_index)``, so a pixel's lightness does not
depend on which other pixels are evaluated or in what order.

Coordinates are ``(row, col)`` throughout. A candidate point is
``(row + rho*cos(theta), col + rho*sin(theta))`` rounded half-up, where
``rho = radius * u`` and ``theta = 2*pi*v`` use the stream's next two draws.
Candidates falling outside the image (or on excluded pixels) are discarded;
the centre pixel is always part of the spray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .image import EPS, LinearImage, PixelMask, resolve_mask

# TBB is probed first by default and warns when too old; the others suffice.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TO_UNIT = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class SprayParams:
    """Spray configuration. ``radius=None`` means the image diagonal."""

    num_sprays: int = 20
    points_per_spray: int = 400
    radius: float | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.num_sprays) != self.num_sprays or self.num_sprays < 1:
            raise ValueError("number of sprays must be a positive integer")
        if int(self.points_per_spray) != self.points_per_spray or self.points_per_spray < 1:
            raise ValueError("points per spray must be a positive integer")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("spray radius must be positive")

    def radius_for(self, height: int, width: int) -> float:
        if self.radius is None:
            return math.hypot(height, width)
        return float(self.radius)

    def seed64(self) -> np.uint64:
        return np.uint64(int(self.seed) & _MASK64)


@dataclass(frozen=True)
class Spray:
    center: tuple[int, int]
    points: list[tuple[int, int]]


@numba.njit(cache=True, nogil=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


@numba.njit(cache=True, nogil=True)
def _spray_key(seed, pixel, spray):
    h = _mix(seed + _GOLDEN)
    h = _mix(h ^ (np.uint64(pixel) + _GOLDEN))
    return _mix(h ^ (np.uint64(spray) + _GOLDEN))


@numba.njit(cache=True, nogil=True, inline="always")
def _draw(state):
    state = state + _GOLDEN
    return state, np.float64(_mix(state) >> _S11) * _TO_UNIT


@numba.njit(cache=True, nogil=True, inline="always")
def _sincos_small(a):
    # Taylor series to degree 13/14; on [0, pi/4] truncation error is < 1e-16.
    a2 = a * a
    s = -1.0 / 1307674368000
    s = s * a2 + 1.0 / 6227020800
    s = s * a2 - 1.0 / 39916800
    s = s * a2 + 1.0 / 362880
    s = s * a2 - 1.0 / 5040
    s = s * a2 + 1.0 / 120
    s = s * a2 - 1.0 / 6
    c = -1.0 / 87178291200
    c = c * a2 + 1.0 / 479001600
    c = c * a2 - 1.0 / 3628800
    c = c * a2 + 1.0 / 40320
    c = c * a2 - 1.0 / 720
    c = c * a2 + 1.0 / 24
    c = c * a2 - 1.0 / 2
    return a + a * a2 * s, 1.0 + a2 * c


_HALF_PI = 0.5 * math.pi


@numba.njit(cache=True, nogil=True, inline="always")
def _cos_sin_turns(v):
    """cos and sin of ``2*pi*v`` for ``v`` in [0, 1).

    The octant is reduced exactly and the remainder evaluated by polynomial,
    using selects rather than branches so the spray loop vectorizes.
    """
    t = 4.0 * v
    q = np.int64(t)
    r = t - q
    flip = r > 0.5
    s, c = _sincos_small(((1.0 - r) if flip else r) * _HALF_PI)
    sb = c if flip else s
    cb = s if flip else c
    odd = (q & 1) == 1
    sign = 1.0 - 2.0 * (q >> 1)
    return (-sb if odd else cb) * sign, (cb if odd else sb) * sign


@numba.njit(cache=True, nogil=True)
def _lightness_at(data, excluded, use_mask, row, col, num_sprays, n, radius, seed, out):
    height, width = excluded.shape
    flat = data.reshape(-1)
    skip = excluded.reshape(-1)
    center = row * width + col
    c0 = max(data[row, col, 0], EPS)
    c1 = max(data[row, col, 1], EPS)
    c2 = max(data[row, col, 2], EPS)
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    # Spray points as flat pixel indices; misses point back at the centre,
    # which the running maximum already holds.
    idx = np.empty(n, np.int64)
    for k in range(num_sprays):
        key = _spray_key(seed, center, k)
        # Branch-free generation: draw j of the stream is mix(key + j*G).
        for j in range(n):
            su = key + np.uint64(2 * j + 1) * _GOLDEN
            u = np.float64(_mix(su) >> _S11) * _TO_UNIT
            v = np.float64(_mix(su + _GOLDEN) >> _S11) * _TO_UNIT
            rho = radius * u
            cs, sn = _cos_sin_turns(v)
            y = math.floor(row + rho * cs + 0.5)
            x = math.floor(col + rho * sn + 0.5)
            inside = (y >= 0) & (y < height) & (x >= 0) & (x < width)
            idx[j] = np.int64(y) * width + np.int64(x) if inside else center
        m0 = flat[3 * center]
        m1 = flat[3 * center + 1]
        m2 = flat[3 * center + 2]
        for j in range(n):
            p = idx[j]
            if use_mask and skip[p]:
                continue
            m0 = max(m0, flat[3 * p])
            m1 = max(m1, flat[3 * p + 1])
            m2 = max(m2, flat[3 * p + 2])
        acc0 += c0 / max(m0, EPS)
        acc1 += c1 / max(m1, EPS)
        acc2 += c2 / max(m2, EPS)
    out[0] = acc0 / num_sprays
    out[1] = acc1 / num_sprays
    out[2] = acc2 / num_sprays


@numba.njit(cache=True, nogil=True, parallel=True)
def _lightness_many(data, excluded, rows, cols, num_sprays, n, radius, seed):
    out = np.empty((rows.shape[0], 3))
    use_mask = excluded.any()
    for i in numba.prange(rows.shape[0]):
        _lightness_at(data, excluded, use_mask, rows[i], cols[i], num_sprays, n,
                      radius, seed, out[i])
    return out


@numba.njit(cache=True, nogil=True)
def _spray_points(height, width, row, col, spray, n, radius, seed):
    pts = np.empty((n + 1, 2), dtype=np.int64)
    state = _spray_key(seed, row * width + col, spray)
    count = 0
    for _ in range(n):
        state, u = _draw(state)
        state, v = _draw(state)
        rho = radius * u
        cs, sn = _cos_sin_turns(v)
        y = int(math.floor(row + rho * cs + 0.5))
        x = int(math.floor(col + rho * sn + 0.5))
        if 0 <= y < height and 0 <= x < width:
            pts[count, 0] = y
            pts[count, 1] = x
            count += 1
    pts[count, 0] = row
    pts[count, 1] = col
    return pts[:count + 1]


@numba.njit(cache=True, nogil=True)
def _spray_radii(height, width, row, col, spray, n, radius, seed):
    """Raw ``rho`` draws of one spray, before rounding or discarding."""
    out = np.empty(n)
    state = _spray_key(seed, row * width + col, spray)
    for j in range(n):
        state, u = _draw(state)
        state, v = _draw(state)
        out[j] = radius * u
    return out


def _check_pixel(shape, pixel) -> tuple[int, int]:
    row, col = int(pixel[0]), int(pixel[1])
    if not (0 <= row < shape[0] and 0 <= col < shape[1]):
        raise ValueError(f"pixel {pixel} outside {shape[1]}x{shape[0]} image")
    return row, col


def generate_spray(center, dims, params: SprayParams, spray_index: int) -> Spray:
    """Return the in-bounds points of one spray; ``dims`` is ``(height, width)``."""
    height, width = int(dims[0]), int(dims[1])
    row, col = _check_pixel((height, width), center)
    pts = _spray_points(height, width, row, col, int(spray_index),
                        int(params.points_per_spray),
                        params.radius_for(height, width), params.seed64())
    return Spray((row, col), [(int(y), int(x)) for y, x in pts])


def spray_radii(center, dims, params: SprayParams, spray_index: int) -> np.ndarray:
    height, width = int(dims[0]), int(dims[1])
    row, col = _check_pixel((height, width), center)
    return _spray_radii(height, width, row, col, int(spray_index),
                        int(params.points_per_spray),
                        params.radius_for(height, width), params.seed64())


def lightness_at(img: LinearImage, rows, cols, params: SprayParams,
                 mask: PixelMask | None = None) -> np.ndarray:
    """RSR lightness at many pixels at once; returns a ``(len(rows), 3)`` array."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    excluded = np.ascontiguousarray(resolve_mask(img, mask))
    return _lightness_many(np.ascontiguousarray(img.data), excluded, rows, cols,
                           int(params.num_sprays), int(params.points_per_spray),
                           params.radius_for(*img.shape), params.seed64())


def rsr_lightness(img: LinearImage, pixel, params: SprayParams,
                  mask: PixelMask | None = None) -> np.ndarray:
    """Per-channel mean over sprays of ``I / spray max``, both floored at EPS."""
    row, col = _check_pixel(img.shape, pixel)
    return lightness_at(img, [row], [col], params, mask)[0]


def rsr_render(img: LinearImage, params: SprayParams,
               mask: PixelMask | None = None) -> LinearImage:
    """Apply RSR at every pixel, giving the locally white-balanced image."""
    rows, cols = np.indices(img.shape)
    out = lightness_at(img, rows.ravel(), cols.ravel(), params, mask)
    return LinearImage(out.reshape(img.height, img.width, 3), img.bit_depth_origin)
