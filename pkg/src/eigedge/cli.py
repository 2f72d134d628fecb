"""Command-line front end: ``eigedge {detect,filters,count,compare}``.

Exit codes: 0 success, 1 I/O failure, 2 invalid flags, 3 algorithmic failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import classic, dictedge, houghcells
from .eigen import ConvergenceError
from .imgcore import BORDER_MODES, ImageIOError, load_image, normalize, save_image

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_ALGO = 0, 1, 2, 3

METHODS = ("sobel", "prewitt", "log", "canny", "dictionary")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def method_params(method: str, args) -> dict:
    """Effective parameters for ``method``; flags left unset fall back to library defaults."""
    def pick(value, default):
        return default if value is None else value

    border = pick(getattr(args, "border", None), "replicate")
    if method in ("sobel", "prewitt"):
        return {"percentile": pick(getattr(args, "threshold_percentile", None),
                                   classic.DEFAULT_BINARIZE_PERCENTILE), "border": border}
    if method == "log":
        return {"sigma": pick(getattr(args, "sigma", None), classic.DEFAULT_LOG_SIGMA),
                "slope_floor": pick(getattr(args, "slope_floor", None), classic.DEFAULT_SLOPE_FLOOR),
                "border": border}
    if method == "canny":
        d = classic.CannyParams()
        return {"sigma": pick(getattr(args, "sigma", None), d.sigma),
                "low": pick(getattr(args, "low", None), d.low),
                "high": pick(getattr(args, "high", None), d.high), "border": border}
    d = dictedge.DictConfig()
    return {"patch_size": pick(getattr(args, "patch_size", None), d.patch_size),
            "threshold_percentile": pick(getattr(args, "threshold_percentile", None),
                                         d.threshold_percentile),
            "border": border}


def validate_params(method: str, params: dict) -> None:
    """Raise ``UsageError`` for any out-of-range value, before any pixel work."""
    try:
        if params.get("border", "replicate") not in BORDER_MODES:
            raise ValueError(f"border must be one of {BORDER_MODES}")
        if method in ("sobel", "prewitt"):
            if not 0 <= params["percentile"] <= 1:
                raise ValueError("threshold percentile must lie in [0, 1]")
        elif method == "log":
            if not params["sigma"] > 0:
                raise ValueError("sigma must be positive")
            if params["slope_floor"] < 0:
                raise ValueError("slope floor must be >= 0")
        elif method == "canny":
            classic.CannyParams(params["sigma"], params["low"], params["high"])
        else:
            dictedge.DictConfig(**params)
    except ValueError as exc:
        raise UsageError(f"invalid {method} parameters: {exc}") from None


def run_method(method: str, img: np.ndarray, params: dict) -> np.ndarray:
    if method == "sobel":
        return classic.sobel_edges(img, params["percentile"], params["border"])
    if method == "prewitt":
        return classic.prewitt_edges(img, params["percentile"], params["border"])
    if method == "log":
        return classic.log_detect(img, params["sigma"], params["slope_floor"], params["border"])
    if method == "canny":
        cp = classic.CannyParams(params["sigma"], params["low"], params["high"])
        return classic.canny(img, cp, params["border"])
    return dictedge.detect_edges(img, dictedge.DictConfig(**params))


def filters_csv(bank: dictedge.EigenfilterBank) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    k = bank.n * bank.n
    writer.writerow(["index"] + [f"c{j}" for j in range(k)] + ["eigenvalue"])
    for i, (f, lam) in enumerate(zip(bank.filters, bank.eigenvalues), 1):
        writer.writerow([i] + [repr(float(v)) for v in f.ravel()] + [repr(float(lam))])
    return buf.getvalue()


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ImageIOError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    return out


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_detect(args) -> int:
    params = method_params(args.method, args)
    validate_params(args.method, params)
    if Path(args.output).suffix.lower() not in (".png", ".pgm"):
        raise UsageError(f"output must end in .png or .pgm, got {args.output}")
    img = load_image(args.input)
    t0 = time.perf_counter()
    edges = run_method(args.method, img, params)
    elapsed = time.perf_counter() - t0
    save_image(edges, args.output)
    print(f"method={args.method} params={json.dumps(params, sort_keys=True)} time={elapsed:.4f}s")
    return EXIT_OK


def cmd_filters(args) -> int:
    params = method_params("dictionary", args)
    validate_params("dictionary", params)
    cfg = dictedge.DictConfig(**params)
    out = _out_dir(args.out_dir)
    img = load_image(args.input)
    t0 = time.perf_counter()
    bank = dictedge.build_filter_bank(img, cfg)
    centered = dictedge.center_stack(dictedge.filter_stack(img, bank, cfg))
    elapsed = time.perf_counter() - t0
    width = len(str(len(bank)))
    for i, (f, layer) in enumerate(zip(bank.filters, centered.layers), 1):
        save_image(normalize(f), out / f"filter_{i:0{width}d}.pgm", "pgm-binary")
        save_image(normalize(layer), out / f"edge_{i:0{width}d}.pgm", "pgm-binary")
    _write_text(out / "filters.csv", filters_csv(bank))
    print(f"method=dictionary params={json.dumps(params, sort_keys=True)} "
          f"filters={len(bank)} time={elapsed:.4f}s")
    return EXIT_OK


def cmd_count(args) -> int:
    dparams = method_params("dictionary", args)
    if args.threshold_percentile is None:
        dparams["threshold_percentile"] = 0.5
    validate_params("dictionary", dparams)
    try:
        hcfg = houghcells.HoughConfig(args.rmin, args.rmax, args.acc_threshold, args.min_dist,
                                      args.edge_percentile)
    except ValueError as exc:
        raise UsageError(f"invalid Hough parameters: {exc}") from None
    out = _out_dir(args.out_dir)
    img = load_image(args.input)
    t0 = time.perf_counter()
    edges = dictedge.detect_edges(img, dictedge.DictConfig(**dparams))
    report = houghcells.count_cells(edges, hcfg)
    elapsed = time.perf_counter() - t0
    overlay = normalize(img)
    for c in report.circles:
        houghcells.draw_circle(overlay, int(round(c.cx)), int(round(c.cy)), c.r)
    _write_text(out / "report.txt", report.to_text())
    _write_text(out / "circles.csv", report.to_records())
    save_image(edges, out / "edges.png")
    save_image(overlay, out / "overlay.png")
    print(report.summary_line())
    print(f"method=dictionary+hough params={json.dumps({**dparams, **asdict(hcfg)}, sort_keys=True)} "
          f"time={elapsed:.4f}s")
    return EXIT_OK


def cmd_compare(args) -> int:
    all_params = {m: method_params(m, args) for m in METHODS}
    for m, p in all_params.items():
        validate_params(m, p)
    out = _out_dir(args.out_dir)
    img = load_image(args.input)
    manifest = {"input": Path(args.input).name, "methods": {}}
    for m in METHODS:
        entry = {"params": all_params[m]}
        t0 = time.perf_counter()
        try:
            if m == "dictionary":
                cfg = dictedge.DictConfig(**all_params[m])
                bank = dictedge.build_filter_bank(img, cfg)
                edges = dictedge.detect_edges(img, cfg, bank=bank)
                _write_text(out / "filters.csv", filters_csv(bank))
            else:
                edges = run_method(m, img, all_params[m])
        except (ValueError, ConvergenceError) as exc:
            entry.update(status="failed", error=str(exc))
        else:
            save_image(edges, out / f"{m}.png")
            entry.update(status="ok", output=f"{m}.png")
        entry["seconds"] = round(time.perf_counter() - t0, 6)
        manifest["methods"][m] = entry
        print(f"method={m} status={entry['status']} time={entry['seconds']:.4f}s")
    _write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eigedge", description="Dictionary (eigenfilter) edge detection, "
                     "classical baselines and circular-Hough cell counting.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def dict_flags(p, with_threshold=True):
        p.add_argument("--patch-size", type=int, help="patch side n (2..8, default 4)")
        if with_threshold:
            p.add_argument("--threshold-percentile", type=float,
                           help="percentile cut applied to the edge map")
        p.add_argument("--border", choices=BORDER_MODES, help="convolution border mode")

    def classic_flags(p):
        p.add_argument("--sigma", type=float, help="Gaussian sigma for log/canny")
        p.add_argument("--low", type=float, help="Canny low threshold (fraction of max)")
        p.add_argument("--high", type=float, help="Canny high threshold (fraction of max)")
        p.add_argument("--slope-floor", type=float, help="LoG zero-crossing floor (fraction of max)")

    p = sub.add_parser("detect", help="write one method's edge map")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", choices=METHODS, default="dictionary")
    dict_flags(p)
    classic_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("filters", help="dump eigenfilters, per-filter edge images and a CSV")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    dict_flags(p, with_threshold=False)
    p.set_defaults(func=cmd_filters)

    p = sub.add_parser("count", help="count circular cells on the dictionary edge map")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    dict_flags(p)
    p.add_argument("--rmin", type=int, default=3)
    p.add_argument("--rmax", type=int, default=8)
    p.add_argument("--acc-threshold", type=float, default=0.4,
                   help="minimum vote fraction of a circle")
    p.add_argument("--min-dist", type=float, help="minimum center distance (default rmin)")
    p.add_argument("--edge-percentile", type=float, default=0.9,
                   help="edge-map binarization percentile before voting")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("compare", help="run all five detectors and write a manifest")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    dict_flags(p)
    classic_flags(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALGO


if __name__ == "__main__":
    sys.exit(main())
