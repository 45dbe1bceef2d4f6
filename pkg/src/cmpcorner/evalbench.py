"""Matching against ground truth, AFP/AFN/SR metrics and wall-clock timing."""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .imagecore import DEFAULT_WINDOWS, GrayImage
from .pipeline import PipelineConfig, detect
from .synth import DeformSpec, GroundTruth, SynthConfig, generate

__all__ = [
    "MatchResult",
    "Frame",
    "FrameResult",
    "EvalReport",
    "BenchReport",
    "match",
    "evaluate",
    "bench",
    "synth_frames",
    "deformed_suite",
    "clean_suite",
    "DEFAULT_TOLERANCE",
    "FAILURE_MODES",
]

DEFAULT_TOLERANCE = 3.0
FAILURE_MODES = ("any", "literal")


def _xy(points) -> np.ndarray:
    if isinstance(points, GroundTruth):
        return points.corners
    pts = list(points)
    if not pts:
        return np.zeros((0, 2))
    if hasattr(pts[0], "x"):
        return np.array([[p.x, p.y] for p in pts], dtype=float)
    return np.asarray(pts, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple[tuple[int, int], ...]  # (detected index, truth index)
    tolerance: float
    distances: tuple[float, ...] = ()

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.distances)) if self.distances else 0.0


def match(detected, truth, tol: float = DEFAULT_TOLERANCE) -> MatchResult:
    """Greedy one-to-one matching in ascending distance.

    Ties in distance go to the lower truth index, then the lower detected
    index. A pair matches only when its distance is at most ``tol``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be > 0")
    d = _xy(detected)
    t = _xy(truth)
    if len(d) == 0 or len(t) == 0:
        return MatchResult(0, len(d), len(t), (), float(tol))
    sparse = cKDTree(d).sparse_distance_matrix(cKDTree(t), tol, output_type="ndarray")
    order = np.lexsort((sparse["i"], sparse["j"], sparse["v"]))
    used_d = np.zeros(len(d), dtype=bool)
    used_t = np.zeros(len(t), dtype=bool)
    pairs, dists = [], []
    for k in order:
        i, j = int(sparse["i"][k]), int(sparse["j"][k])
        if used_d[i] or used_t[j]:
            continue
        used_d[i] = used_t[j] = True
        pairs.append((i, j))
        dists.append(float(sparse["v"][k]))
    tp = len(pairs)
    return MatchResult(tp, len(d) - tp, len(t) - tp, tuple(pairs), float(tol), tuple(dists))


@dataclass(frozen=True)
class Frame:
    image: GrayImage
    truth: GroundTruth
    name: str = ""
    window: int | None = None  # binarization window override


@dataclass(frozen=True)
class FrameResult:
    name: str
    detected: int
    truth: int
    tp: int
    fp: int
    fn: int
    mean_error: float
    success: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class EvalReport:
    afp: float
    afn: float
    sr: float
    tolerance: float
    failure_mode: str
    frames: tuple[FrameResult, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "afp": self.afp,
            "afn": self.afn,
            "sr": self.sr,
            "tolerance": self.tolerance,
            "failure_mode": self.failure_mode,
            "frame_count": len(self.frames),
            "frames": [f.to_dict() for f in self.frames],
        }

    def table(self) -> tuple[list[str], list[tuple]]:
        header = ["name", "detected", "truth", "tp", "fp", "fn", "mean_error", "success"]
        return header, [tuple(f.to_dict()[h] for h in header) for f in self.frames]


def _frame_ok(fp: int, fn: int, mode: str) -> bool:
    if mode == "any":
        return fp == 0 and fn == 0
    return fp <= 1 and fn <= 1  # failure only when a count exceeds 1


def summarize(results, tol: float, failure_mode: str = "any") -> EvalReport:
    results = tuple(results)
    if not results:
        raise ValueError("need at least one frame")
    n = len(results)
    return EvalReport(
        afp=sum(r.fp for r in results) / n,
        afn=sum(r.fn for r in results) / n,
        sr=sum(r.success for r in results) / n,
        tolerance=float(tol),
        failure_mode=failure_mode,
        frames=results,
    )


def _as_frame(item, k: int) -> Frame:
    if isinstance(item, Frame):
        return item
    image, truth = item
    return Frame(image, truth, f"frame{k:03d}")


def evaluate(
    dataset,
    config: PipelineConfig | None = None,
    tol: float = DEFAULT_TOLERANCE,
    failure_mode: str = "any",
    workers: int = 1,
) -> EvalReport:
    """Run the pipeline on every frame and aggregate AFP, AFN and SR.

    ``failure_mode`` "any" fails a frame on a single false or missed
    corner; "literal" fails it only when either count exceeds one.
    """
    if failure_mode not in FAILURE_MODES:
        raise ValueError(f"failure_mode must be one of {FAILURE_MODES}")
    if not tol > 0:
        raise ValueError("tolerance must be > 0")
    config = config or PipelineConfig()
    frames = [_as_frame(item, k) for k, item in enumerate(dataset)]
    if not frames:
        raise ValueError("need at least one frame")

    def run(frame: Frame) -> FrameResult:
        cfg = config if frame.window is None else replace(config, window=frame.window)
        corners = detect(frame.image, cfg)
        m = match(corners, frame.truth, tol)
        return FrameResult(
            frame.name, len(corners), len(frame.truth), m.tp, m.fp, m.fn, m.mean_error,
            _frame_ok(m.fp, m.fn, failure_mode),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, frames))
    else:
        results = [run(f) for f in frames]
    return summarize(results, tol, failure_mode)


@dataclass(frozen=True)
class BenchReport:
    frames: int
    mean_ms: float
    median_ms: float
    threads: int
    corners: int
    samples_ms: tuple[float, ...]
    warmup: int

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "threads": self.threads,
            "corners": self.corners,
            "warmup": self.warmup,
            "samples_ms": list(self.samples_ms),
        }


def bench(
    frame: GrayImage,
    config: PipelineConfig | None = None,
    repetitions: int = 100,
    threads: int = 1,
    warmup: int = 10,
) -> BenchReport:
    """Time the full pipeline (no file I/O) on one frame.

    Raises RuntimeError if any repetition yields different corners.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    config = replace(config or PipelineConfig(), threads=threads)
    reference = detect(frame, config)
    for _ in range(warmup):
        detect(frame, config)
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = detect(frame, config)
        samples.append((time.perf_counter() - t0) * 1e3)
        if out != reference:
            raise RuntimeError("pipeline output changed between repetitions")
    return BenchReport(
        frames=repetitions,
        mean_ms=statistics.fmean(samples),
        median_ms=statistics.median(samples),
        threads=threads,
        corners=len(reference),
        samples_ms=tuple(samples),
        warmup=warmup,
    )


# --------------------------------------------------------------------------
# Synthetic datasets


def window_for(cfg: SynthConfig) -> int:
    """Binarization window suited to the marker density."""
    if cfg.grid in DEFAULT_WINDOWS and cfg.width is None:
        return DEFAULT_WINDOWS[cfg.grid]
    w = 2 * cfg.cell_px + 1
    return w if w % 2 else w + 1


def synth_frames(configs) -> list[Frame]:
    frames = []
    for k, cfg in enumerate(configs):
        img, gt = generate(cfg)
        frames.append(Frame(img, gt, f"synth{k:03d}_{cfg.deform.mode}_seed{cfg.seed}", window_for(cfg)))
    return frames


GRID_CELLS = {20: 16, 30: 12, 40: 10}


def clean_suite(grids=(20, 30, 40), seeds=(1, 2, 3, 4, 5)) -> list[SynthConfig]:
    return [SynthConfig(grid=g, cell_px=GRID_CELLS[g], seed=s) for g in grids for s in seeds]


def deformed_suite(count: int = 60, seed: int = 0) -> list[SynthConfig]:
    """Press, shear and twist frames with amplitude <= 0.3 cell, corrosion
    radius <= 2 px and noise sigma <= 8, cycling over 20/30/40 grids."""
    rng = np.random.Generator(np.random.PCG64(seed))
    modes = ("press", "shear", "twist")
    grids = (20, 30, 40)
    out = []
    for k in range(count):
        grid = grids[(k // 3) % 3]
        cell = GRID_CELLS[grid]
        deform = DeformSpec(
            mode=modes[k % 3],
            amplitude=float(rng.uniform(0.1, 0.3) * cell),
            center=(float(rng.uniform(0.3, 0.7)), float(rng.uniform(0.3, 0.7))),
            radius=float(rng.uniform(0.2, 0.35)),
            direction=float(rng.uniform(0, 2 * np.pi)),
        )
        out.append(
            SynthConfig(
                grid=grid,
                cell_px=cell,
                deform=deform,
                corrosion_radius=float(rng.uniform(0.0, 2.0)),
                noise_sigma=float(rng.uniform(0.0, 8.0)),
                illumination_ramp=float(rng.uniform(-0.1, 0.1)),
                seed=int(rng.integers(0, 2**63)),
            )
        )
    return out
