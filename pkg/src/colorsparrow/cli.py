"""``colorsparrow`` command line: estimate, correct, rsr-render, evaluate, bench, sweep.

Machine-readable output (CSV or numbers) goes to stdout or ``--out``; human
tables go to stderr. Exit codes: 0 success, 1 usage error, 2 I/O error,
3 estimation error.
"""

from __future__ import annotations

import argparse
import contextlib
import itertools
import logging
import sys

import numpy as np

from .errors import EstimationError, ImageIOError
from .estimator import WEIGHTINGS, CsParams
from .evaluation import (METHODS, STATS_COLUMNS, Estimator, bench, evaluate,
                         format_table, load_manifest, stats_fields,
                         thread_limit, write_bench_csv, write_results_csv)
from .image import PixelMask, diagonal_correct, load_png, save_png
from .rsr import SprayParams, rsr_render

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_ESTIMATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _rects(text: str) -> list[tuple[int, int, int, int]]:
    from .evaluation import _parse_rects
    try:
        return _parse_rects(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_common(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    conv = _int_list if sweep else int
    conv_w = _str_list if sweep else str
    g = p.add_argument_group("estimator")
    if not sweep:
        g.add_argument("--method", default="cs", choices=METHODS,
                       help="estimator (default: cs)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all cores)")
    g.add_argument("--sprays", type=conv, default=[1] if sweep else 1, metavar="N")
    g.add_argument("--spray-size", type=conv, default=[225] if sweep else 225, metavar="n")
    g.add_argument("--kernel", type=conv, default=[5] if sweep else 5, metavar="K")
    g.add_argument("--row-step", type=conv, default=[50] if sweep else 50, metavar="r")
    g.add_argument("--col-step", type=conv, default=[50] if sweep else 50, metavar="c")
    g.add_argument("--weighting", type=conv_w, default=["weighted"] if sweep else "weighted",
                   **({} if sweep else {"choices": WEIGHTINGS}))
    if not sweep:
        g.add_argument("--minkowski-p", type=float, default=6.0,
                       help="norm for shades-of-gray (default: 6)")
        g.add_argument("--blocks", type=int, default=100, help="block count for sdwgw")


def _cs_params(sprays, spray_size, kernel, row_step, col_step, weighting, seed) -> CsParams:
    return CsParams(SprayParams(sprays, spray_size, None, seed), kernel,
                    row_step, col_step, weighting)


def _estimator(args, method=None) -> Estimator:
    try:
        cs = _cs_params(args.sprays, args.spray_size, args.kernel, args.row_step,
                        args.col_step, args.weighting, args.seed)
        return Estimator(method or args.method, cs, args.minkowski_p, args.blocks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        try:
            fh = open(path, "w", newline="")
        except OSError as exc:
            raise ImageIOError(f"cannot open {path}: {exc}") from exc
        with fh:
            yield fh


def _manifest(path, limit=None):
    try:
        manifest = load_manifest(path)
    except ValueError as exc:
        raise ImageIOError(f"bad manifest {path}: {exc}") from exc
    return manifest.subset(limit) if limit else manifest


def _image_mask(img, rects):
    return PixelMask.from_rects(img.height, img.width, rects) if rects else None


def cmd_estimate(args) -> int:
    est = _estimator(args)
    img = load_png(args.image)
    try:
        mask = _image_mask(img, args.mask)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with thread_limit(args.threads):
        e = est(img, mask)
    unit = e / np.linalg.norm(e)
    print(" ".join(f"{v:.4f}" for v in unit))
    print(" ".join(f"{v:.10g}" for v in e))
    return EXIT_OK


def cmd_correct(args) -> int:
    est = _estimator(args)
    img = load_png(args.image)
    try:
        mask = _image_mask(img, args.mask)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with thread_limit(args.threads):
        e = est(img, mask)
    if np.any(e <= 0):
        raise EstimationError(f"estimate {tuple(e)} has a zero component; cannot correct")
    save_png(diagonal_correct(img, e), args.output)
    print(" ".join(f"{v:.10g}" for v in e))
    return EXIT_OK


def cmd_rsr_render(args) -> int:
    try:
        params = SprayParams(args.sprays, args.spray_size, args.radius, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    img = load_png(args.image)
    with thread_limit(args.threads):
        out = rsr_render(img, params)
    save_png(out, args.output)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    est = _estimator(args)
    manifest = _manifest(args.manifest)
    result = evaluate(manifest, est, args.threads)
    with _output(args.out) as fh:
        fh.write(",".join(STATS_COLUMNS + (["time"] if args.timing else [])) + "\n")
        fh.write(",".join(stats_fields(result.stats, args.timing)) + "\n")
    if args.per_image:
        with _output(args.per_image) as fh:
            write_results_csv(result.rows, fh, args.timing)
    sys.stderr.write(format_table([(args.method, result.stats)]))
    if result.failures:
        sys.stderr.write(f"{len(result.failures)} image(s) skipped\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = args.methods or ["gray-world", "cs"]
    estimators = [(m, _estimator(args, m)) for m in methods]
    manifest = _manifest(args.manifest, args.limit)
    results = bench(manifest, estimators, args.repeats, args.threads)
    with _output(args.out) as fh:
        write_bench_csv(results, fh)
    for r in results:
        sys.stderr.write(f"{r.name:<16} {r.mean_seconds:9.3f} s total  "
                         f"{r.per_image_ms:9.2f} ms/image\n")
    if len(results) > 1:
        base = results[0].mean_seconds
        for r in results[1:]:
            sys.stderr.write(f"{r.name} / {results[0].name} time ratio: "
                             f"{r.mean_seconds / base:.3f}\n")
    return EXIT_OK


SWEEP_AXES = ("sprays", "spray_size", "kernel", "row_step", "col_step", "weighting")


def cmd_sweep(args) -> int:
    if args.step is not None:
        args.row_step = args.step
        args.col_step = args.step
    axes = [getattr(args, name) for name in SWEEP_AXES]
    if any(len(a) == 0 for a in axes):
        raise UsageError("every sweep range must be non-empty")
    if args.step is not None:
        points = [(n, s, k, st, st, w) for n, s, k, st, w in
                  itertools.product(args.sprays, args.spray_size, args.kernel,
                                    args.step, args.weighting)]
    else:
        points = list(itertools.product(*axes))
    # Validate the whole grid before any work is done or output written.
    try:
        estimators = [Estimator("cs", _cs_params(*pt, args.seed)) for pt in points]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest = _manifest(args.manifest)
    rows = []
    for pt, est in zip(points, estimators):
        result = evaluate(manifest, est, args.threads)
        rows.append((pt, result.stats))
        sys.stderr.write(f"{dict(zip(SWEEP_AXES, pt))}: mean {result.stats.mean:.3f}, "
                         f"median {result.stats.median:.3f}\n")
    with _output(args.out) as fh:
        header = list(SWEEP_AXES) + STATS_COLUMNS + (["time"] if args.timing else [])
        fh.write(",".join(header) + "\n")
        for pt, stats in rows:
            fh.write(",".join([str(v) for v in pt] + stats_fields(stats, args.timing)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colorsparrow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="print the illuminant estimate of one image")
    p.add_argument("image")
    p.add_argument("--mask", type=_rects, default=[], help="x:y:w:h[;x:y:w:h...]")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("correct", help="white-balance an image with the estimate")
    p.add_argument("image")
    p.add_argument("output")
    p.add_argument("--mask", type=_rects, default=[], help="x:y:w:h[;x:y:w:h...]")
    _add_common(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("rsr-render", help="write the RSR-processed image")
    p.add_argument("image")
    p.add_argument("output")
    p.add_argument("--sprays", type=int, default=20, metavar="N")
    p.add_argument("--spray-size", type=int, default=400, metavar="n")
    p.add_argument("--radius", type=float, default=None,
                   help="spray radius in pixels (default: image diagonal)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_rsr_render)

    p = sub.add_parser("evaluate", help="angular-error statistics over a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="stats CSV (default: stdout)")
    p.add_argument("--per-image", help="write per-image errors CSV here")
    p.add_argument("--timing", action="store_true", help="add wall-time columns")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="single-threaded timing of estimators")
    p.add_argument("manifest")
    p.add_argument("--methods", type=_str_list, default=None,
                   help="comma-separated methods (default: gray-world,cs)")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--limit", type=int, default=None, help="use the first LIMIT images")
    p.add_argument("--out", help="timing CSV (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_bench, threads=1)

    p = sub.add_parser("sweep", help="evaluate cs over a parameter grid")
    p.add_argument("manifest")
    p.add_argument("--step", type=_int_list, default=None,
                   help="comma-separated values used for both row and column step")
    p.add_argument("--out", help="sweep CSV (default: stdout)")
    p.add_argument("--timing", action="store_true", help="add wall-time column")
    _add_common(p, sweep=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.command == "bench" and args.repeats < 1:
        parser.error("--repeats must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"colorsparrow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageIOError, OSError) as exc:
        print(f"colorsparrow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EstimationError as exc:
        print(f"colorsparrow: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except ValueError as exc:
        print(f"colorsparrow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
