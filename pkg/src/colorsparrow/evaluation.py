"""Angular-error benchmarking of illuminant estimators over a dataset manifest.

Manifest CSV columns: ``image,gt_r,gt_g,gt_b,mask`` where ``mask`` is a
semicolon-separated list of ``x:y:w:h`` rectangles (may be empty). Relative
image paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import contextlib
import csv
import io
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from . import baselines
from .errors import EstimationError, ImageIOError
from .estimator import CsParams, estimate
from .image import LinearImage, PixelMask, load_png

log = logging.getLogger(__name__)

METHODS = ("cs", "gray-world", "sdwgw", "shades-of-gray")


def angular_error(estimate_vec, groundtruth) -> float:
    """Angle in degrees between two RGB vectors.

    Uses atan2(|e x g|, e . g): arccos of the normalized dot product loses
    about 1e-6 degrees to rounding near zero.
    """
    e = np.asarray(estimate_vec, dtype=np.float64)
    g = np.asarray(groundtruth, dtype=np.float64)
    ne, ng = np.linalg.norm(e), np.linalg.norm(g)
    if not ne > 0 or not ng > 0:
        raise ValueError("angular error needs vectors with positive norm")
    e, g = e / ne, g / ng
    return math.degrees(math.atan2(float(np.linalg.norm(np.cross(e, g))), float(np.dot(e, g))))


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    median: float
    trimean: float
    max: float
    count: int
    total_time: float = 0.0


def _quantile(sorted_vals: np.ndarray, q: float) -> float:
    # Linear interpolation between closest ranks (numpy's default rule).
    pos = q * (len(sorted_vals) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(sorted_vals) - 1)
    return float(sorted_vals[lo] + (pos - lo) * (sorted_vals[hi] - sorted_vals[lo]))


def summarize(errors: Sequence[float], total_time: float = 0.0) -> ErrorStats:
    vals = np.sort(np.asarray(errors, dtype=np.float64))
    if vals.size == 0:
        raise ValueError("cannot summarize an empty error list")
    q1, q2, q3 = (_quantile(vals, q) for q in (0.25, 0.5, 0.75))
    return ErrorStats(
        mean=float(math.fsum(vals) / len(vals)),
        median=q2,
        trimean=(q1 + 2.0 * q2 + q3) / 4.0,
        max=float(vals[-1]),
        count=int(vals.size),
        total_time=total_time,
    )


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    groundtruth: tuple[float, float, float]
    mask_rects: list[tuple[int, int, int, int]] = field(default_factory=list)

    def __post_init__(self):
        g = np.asarray(self.groundtruth, dtype=np.float64)
        if g.shape != (3,) or np.any(g < 0) or not np.linalg.norm(g) > 0:
            raise ValueError(f"bad ground truth for {self.image_path}: {self.groundtruth}")


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: str = "."

    def resolve(self, entry: ManifestEntry) -> str:
        return os.path.join(self.root, entry.image_path)

    def subset(self, count: int) -> "DatasetManifest":
        return DatasetManifest(self.entries[:count], self.root)

    def __len__(self):
        return len(self.entries)


def _parse_rects(text: str) -> list[tuple[int, int, int, int]]:
    rects = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        if len(fields) != 4:
            raise ValueError(f"mask rectangle must be x:y:w:h, got {part!r}")
        rects.append(tuple(int(v) for v in fields))
    return rects


def load_manifest(path) -> DatasetManifest:
    path = os.fspath(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            expected = ["image", "gt_r", "gt_g", "gt_b", "mask"]
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
                raise ValueError(f"manifest header must be {','.join(expected)}")
            entries = [
                ManifestEntry(row["image"],
                              (float(row["gt_r"]), float(row["gt_g"]), float(row["gt_b"])),
                              _parse_rects(row["mask"] or ""))
                for row in reader
            ]
    except OSError as exc:
        raise ImageIOError(f"cannot read manifest {path}: {exc}") from exc
    if not entries:
        raise ValueError(f"manifest {path} has no entries")
    return DatasetManifest(entries, os.path.dirname(os.path.abspath(path)))


def write_manifest(entries: Sequence[ManifestEntry], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image", "gt_r", "gt_g", "gt_b", "mask"])
        for e in entries:
            mask = ";".join(":".join(str(v) for v in r) for r in e.mask_rects)
            writer.writerow([e.image_path, *(repr(float(v)) for v in e.groundtruth), mask])


@dataclass(frozen=True)
class Estimator:
    """A named estimator with its parameters bound."""

    method: str = "cs"
    cs: CsParams = field(default_factory=CsParams)
    p: float = 6.0
    num_blocks: int = 100

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")

    def __call__(self, img: LinearImage, mask: PixelMask | None = None) -> np.ndarray:
        if self.method == "cs":
            return estimate(img, mask, self.cs)
        if self.method == "gray-world":
            return baselines.gray_world(img, mask)
        if self.method == "sdwgw":
            return baselines.sdwgw(img, mask, self.num_blocks)
        return baselines.shades_of_gray(img, mask, self.p)


@contextlib.contextmanager
def thread_limit(threads: int | None):
    """Cap the worker threads used by the RSR kernels inside the block."""
    if threads is None:
        yield
        return
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    previous = numba.get_num_threads()
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    try:
        yield
    finally:
        numba.set_num_threads(previous)


@dataclass(frozen=True)
class ImageResult:
    image: str
    error_deg: float
    time_ms: float
    estimate: tuple[float, float, float]


@dataclass
class EvaluationResult:
    stats: ErrorStats
    rows: list[ImageResult]
    failures: list[tuple[str, str]]


def run_one(manifest: DatasetManifest, entry: ManifestEntry,
            estimator: Callable) -> tuple[np.ndarray, float]:
    """Load one entry, mask it and estimate; returns (estimate, seconds)."""
    start = time.perf_counter()
    img = load_png(manifest.resolve(entry))
    mask = PixelMask.from_rects(img.height, img.width, entry.mask_rects) if entry.mask_rects else None
    e = estimator(img, mask)
    return e, time.perf_counter() - start


def evaluate(manifest: DatasetManifest, estimator: Callable,
             threads: int | None = None) -> EvaluationResult:
    """Estimate every manifest image and summarize the angular errors.

    Images that fail to load or estimate are logged, skipped and listed in
    ``failures``.
    """
    if len(manifest) == 0:
        raise ValueError("manifest is empty")
    rows, failures = [], []
    start = time.perf_counter()
    with thread_limit(threads):
        for entry in manifest.entries:
            try:
                e, seconds = run_one(manifest, entry, estimator)
            except (ImageIOError, EstimationError, ValueError) as exc:
                log.warning("skipping %s: %s", entry.image_path, exc)
                failures.append((entry.image_path, str(exc)))
                continue
            rows.append(ImageResult(entry.image_path, angular_error(e, entry.groundtruth),
                                    seconds * 1e3, tuple(float(v) for v in e)))
    total = time.perf_counter() - start
    if not rows:
        raise EstimationError("no image of the manifest could be evaluated")
    stats = summarize([r.error_deg for r in rows], total)
    return EvaluationResult(stats, rows, failures)


def write_results_csv(rows: Sequence[ImageResult], fh, timing: bool = False) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["image", "error_deg", "time_ms"] if timing else ["image", "error_deg"])
    for r in rows:
        fields = [r.image, f"{r.error_deg:.6f}"]
        if timing:
            fields.append(f"{r.time_ms:.3f}")
        writer.writerow(fields)


STATS_COLUMNS = ["mean", "median", "trimean", "max", "count"]


def stats_fields(stats: ErrorStats, timing: bool = False) -> list[str]:
    fields = [f"{stats.mean:.6f}", f"{stats.median:.6f}", f"{stats.trimean:.6f}",
              f"{stats.max:.6f}", str(stats.count)]
    if timing:
        fields.append(f"{stats.total_time:.6f}")
    return fields


def format_table(named_stats: Sequence[tuple[str, ErrorStats]]) -> str:
    """Fixed-column table laid out like the usual color constancy results table."""
    width = max([len("method")] + [len(name) for name, _ in named_stats])
    out = io.StringIO()
    out.write(f"{'method':<{width}}  {'mean (°)':>9}  {'median (°)':>10}  "
              f"{'trimean (°)':>11}  {'max (°)':>8}\n")
    for name, s in named_stats:
        out.write(f"{name:<{width}}  {s.mean:>9.2f}  {s.median:>10.2f}  "
                  f"{s.trimean:>11.2f}  {s.max:>8.2f}\n")
    return out.getvalue()


@dataclass(frozen=True)
class BenchResult:
    name: str
    repeats: int
    images: int
    samples: tuple[float, ...]

    @property
    def mean_seconds(self) -> float:
        return float(np.mean(self.samples))

    @property
    def per_image_ms(self) -> float:
        return 1e3 * self.mean_seconds / self.images


def bench(manifest: DatasetManifest, estimators: Sequence[tuple[str, Callable]],
          repeats: int = 3, threads: int | None = 1) -> list[BenchResult]:
    """Wall time of load + estimate over the whole manifest, per estimator.

    Each estimator is warmed up on the first image (JIT compilation) before
    ``repeats`` timed passes. ``threads=1`` gives single-core timings.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if len(manifest) == 0:
        raise ValueError("manifest is empty")
    results = []
    with thread_limit(threads):
        for name, est in estimators:
            run_one(manifest, manifest.entries[0], est)
            samples = []
            for _ in range(repeats):
                start = time.perf_counter()
                for entry in manifest.entries:
                    run_one(manifest, entry, est)
                samples.append(time.perf_counter() - start)
            results.append(BenchResult(name, repeats, len(manifest), tuple(samples)))
    return results


def write_bench_csv(results: Sequence[BenchResult], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["method", "repeats", "images", "mean_total_s", "per_image_ms"])
    for r in results:
        writer.writerow([r.name, r.repeats, r.images, f"{r.mean_seconds:.6f}",
                         f"{r.per_image_ms:.3f}"])
