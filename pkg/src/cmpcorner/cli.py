"""Command-line entry point: detect, synth, eval, bench, curves.

Exit codes: 0 success, 2 usage or input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import curves
from .detector import DetectorParams
from .evalbench import (
    DEFAULT_TOLERANCE,
    FAILURE_MODES,
    Frame,
    bench,
    clean_suite,
    deformed_suite,
    evaluate,
    synth_frames,
)
from .formats import corners_document, dumps_json, write_csv
from .imagecore import GrayImage, PgmError, load_png, parse_pgm, save_pgm
from .pipeline import PipelineConfig, default_threads, detect
from .synth import DEFORM_MODES, DeformSpec, GroundTruth, SynthConfig, generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class UsageError(Exception):
    """Bad flags or unreadable input."""


# --------------------------------------------------------------------------
# Flag groups


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector")
    g.add_argument("--window", type=int, default=None, help="adaptive threshold window (odd); default 31")
    g.add_argument("--offset", type=int, default=0, help="threshold offset in [-64, 64]")
    g.add_argument("--delta-th", type=int, default=5, help="sector symmetry threshold")
    g.add_argument("--d-th", type=int, default=5, help="ring XOR distance threshold")
    g.add_argument("--cd-th", type=int, default=4, help="corrosion degree threshold")
    g.add_argument("--nms-radius", type=int, default=3)
    g.add_argument("--fit", choices=("linear", "quadratic"), default="linear", help="refinement line fit")
    g.add_argument("--threads", type=_positive_int, default=None, help="default: available CPUs")


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic image")
    g.add_argument("--grid", type=int, default=20, help="cells per side")
    g.add_argument("--cell-px", type=int, default=16)
    g.add_argument("--deform", choices=DEFORM_MODES, default="none")
    g.add_argument("--amplitude", type=_nonneg_float, default=0.0, help="peak displacement in px")
    g.add_argument("--corrosion", type=_nonneg_float, default=0.0, help="blur disk radius at corners")
    g.add_argument("--noise", type=_nonneg_float, default=0.0, help="Gaussian noise sigma")
    g.add_argument("--ramp", type=float, default=0.0, help="illumination gradient per px")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--width", type=int, default=None, help="canvas width (default: board + margins)")
    g.add_argument("--height", type=int, default=None)


def _pipeline_config(args) -> PipelineConfig:
    try:
        det = DetectorParams(args.delta_th, args.d_th, args.cd_th, args.nms_radius)
        if not -64 <= args.offset <= 64:
            raise ValueError(f"offset must lie in [-64, 64], got {args.offset}")
        window = 31 if args.window is None else args.window
        if window < 3 or window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {window}")
        threads = args.threads or default_threads()
        return PipelineConfig(window, args.offset, det, args.fit, threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _synth_config(args, seed: int | None = None) -> SynthConfig:
    try:
        deform = DeformSpec(args.deform, args.amplitude if args.deform != "none" else 0.0)
        return SynthConfig(
            grid=args.grid,
            cell_px=args.cell_px,
            deform=deform,
            corrosion_radius=args.corrosion,
            noise_sigma=args.noise,
            illumination_ramp=args.ramp,
            seed=args.seed if seed is None else seed,
            width=args.width,
            height=args.height,
        )
    except ValueError as exc:
        raise UsageError(f"invalid synth config: {exc}") from exc


def _read_image(path) -> GrayImage:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        if data.startswith(PNG_MAGIC):
            return load_png(path)
        return parse_pgm(data)
    except (PgmError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _fit_window(cfg: PipelineConfig, img: GrayImage, explicit: bool) -> PipelineConfig:
    """Shrink the default window on small images; explicit values are checked."""
    limit = min(img.width, img.height)
    if cfg.window <= limit:
        return cfg
    if explicit:
        raise UsageError(f"window {cfg.window} exceeds the image's shorter side {limit}")
    w = limit if limit % 2 else limit - 1
    return replace(cfg, window=max(3, w))


def annotate(img: GrayImage, corners, arm: int = 3) -> GrayImage:
    """Copy of ``img`` with a contrasting cross of half-length ``arm`` per corner."""
    px = img.pixels.copy()
    h, w = px.shape
    for c in corners:
        cx, cy = int(round(c.x)), int(round(c.y))
        for k in range(-arm, arm + 1):
            for x, y in ((cx + k, cy), (cx, cy + k)):
                if 0 <= x < w and 0 <= y < h:
                    px[y, x] = 255 if img.pixels[y, x] < 128 else 0
    return GrayImage(px)


# --------------------------------------------------------------------------
# Subcommands


def cmd_detect(args) -> int:
    img = _read_image(args.input)
    cfg = _fit_window(_pipeline_config(args), img, args.window is not None)
    if min(img.width, img.height) < 16:
        raise UsageError(f"image {img.width}x{img.height} is smaller than 16x16")
    corners = detect(img, cfg)
    _emit(dumps_json(corners_document(img.width, img.height, cfg.to_dict(), corners)), args.out)
    if args.annotate:
        try:
            save_pgm(annotate(img, corners), args.annotate)
        except OSError as exc:
            raise UsageError(str(exc)) from exc
    return EXIT_OK


def truth_document(cfg: SynthConfig, truth: GroundTruth) -> dict:
    w, h = cfg.dims
    return {
        "width": w,
        "height": h,
        "params": cfg.to_dict(),
        "corners": [
            {"x": x, "y": y, "i": int(i), "j": int(j), "response": 0, "method": "truth"}
            for (x, y), (i, j) in zip(truth.corners, truth.indices)
        ],
    }


def cmd_synth(args) -> int:
    cfg = _synth_config(args)
    img, truth = generate(cfg)
    out = Path(args.out)
    sidecar = out.with_suffix(".json")
    try:
        save_pgm(img, out)
        sidecar.write_text(dumps_json(truth_document(cfg, truth)), encoding="utf-8")
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    print(f"{out}: {img.width}x{img.height}, {len(truth)} ground-truth corners -> {sidecar}")
    return EXIT_OK


def _load_truth(path: Path) -> GroundTruth:
    doc = json.loads(path.read_text(encoding="utf-8"))
    rows = doc["corners"]
    pts = np.array([[c["x"], c["y"]] for c in rows], dtype=float).reshape(-1, 2)
    idx = np.array([[c.get("i", -1), c.get("j", -1)] for c in rows], dtype=int).reshape(-1, 2)
    return GroundTruth(pts, idx)


def _recipe_configs(path) -> list[SynthConfig]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read recipe {path}: {exc}") from exc
    try:
        if isinstance(doc, list):
            return [SynthConfig.from_dict(d) for d in doc]
        suite = doc.get("suite")
        if suite == "deformed":
            return deformed_suite(int(doc.get("count", 60)), int(doc.get("seed", 0)))
        if suite == "clean":
            return clean_suite(tuple(doc.get("grids", (20, 30, 40))), tuple(doc.get("seeds", (1, 2, 3, 4, 5))))
        return [SynthConfig.from_dict(d) for d in doc["frames"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid recipe {path}: {exc}") from exc


def _directory_frames(directory: Path):
    frames, errors = [], []
    images = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".pgm", ".png"))
    for p in images:
        side = p.with_suffix(".json")
        if not side.exists():
            errors.append({"name": p.stem, "error": f"missing ground-truth sidecar {side.name}"})
            continue
        try:
            frames.append(Frame(_read_image(p), _load_truth(side), p.stem))
        except (UsageError, KeyError, TypeError, ValueError) as exc:
            errors.append({"name": p.stem, "error": str(exc)})
    return frames, errors


def cmd_eval(args) -> int:
    cfg = _pipeline_config(args)
    if args.tolerance <= 0:
        raise UsageError("tolerance must be > 0")
    errors = []
    if args.recipe:
        frames = synth_frames(_recipe_configs(args.recipe))
    elif args.synth_frames:
        frames = synth_frames(_synth_config(args, args.seed + k) for k in range(args.synth_frames))
    elif args.dataset:
        directory = Path(args.dataset)
        if not directory.is_dir():
            raise UsageError(f"dataset {directory} is not a directory")
        frames, errors = _directory_frames(directory)
    else:
        raise UsageError("give a dataset directory, --recipe or --synth-frames")
    if not frames:
        sys.stderr.write("no frame could be loaded\n")
        for e in errors:
            sys.stderr.write(f"  {e['name']}: {e['error']}\n")
        return EXIT_USAGE
    if args.window is not None:
        frames = [replace(f, window=args.window) for f in frames]
    report = evaluate(frames, cfg, args.tolerance, args.failure_mode)
    doc = report.to_dict()
    doc["errors"] = errors
    doc["params"] = cfg.to_dict()
    _emit(dumps_json(doc), args.out)
    if args.csv:
        header, rows = report.table()
        write_csv(args.csv, header, rows)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _pipeline_config(args)
    if args.input:
        img = _read_image(args.input)
    else:
        img, _ = generate(_synth_config(args))
    if args.window is None and args.input is None:
        cfg = replace(cfg, window=2 * args.cell_px + 1)
    cfg = _fit_window(cfg, img, args.window is not None)
    threads = args.threads or default_threads()
    report = bench(img, cfg, args.repetitions, threads, args.warmup)
    doc = report.to_dict()
    doc["width"], doc["height"] = img.width, img.height
    doc["params"] = cfg.to_dict()
    _emit(dumps_json(doc), args.out)
    return EXIT_OK


def cmd_curves(args) -> int:
    try:
        paths = curves.write_all(args.out)
    except OSError as exc:
        raise UsageError(f"cannot write curves to {args.out}: {exc.strerror or exc}") from exc
    for p in paths:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmpcorner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect corners in a PGM (or PNG) image")
    p.add_argument("input")
    _add_detector_flags(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--annotate", metavar="PGM", help="also write an annotated copy of the image")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="render a synthetic marker image and its ground truth")
    _add_synth_flags(p)
    p.add_argument("--out", required=True, help="output PGM path; the sidecar gets a .json suffix")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="AFP/AFN/SR over a dataset or a synthetic recipe")
    p.add_argument("dataset", nargs="?", help="directory of image + .json truth pairs")
    p.add_argument("--recipe", help="JSON list of synth configs or {'suite': 'clean'|'deformed'}")
    p.add_argument("--synth-frames", type=_positive_int, help="render N frames from the synth flags, seeds seed..seed+N-1")
    _add_detector_flags(p)
    _add_synth_flags(p)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="match radius in px")
    p.add_argument("--failure-mode", choices=FAILURE_MODES, default="any")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--csv", help="also write the per-frame table as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="wall-clock timing of the full pipeline")
    p.add_argument("input", nargs="?", help="image to time; default renders a 640x480 frame")
    _add_detector_flags(p)
    _add_synth_flags(p)
    p.set_defaults(grid=45, cell_px=10, width=640, height=480)
    p.add_argument("--repetitions", type=_positive_int, default=100)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("curves", help="write the spectral and correlation sweep tables as CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"cmpcorner {args.command}: {exc}\n")
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        sys.stderr.write(f"cmpcorner {args.command}: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
