"""End-to-end detection: binarize, scan, suppress, refine."""

from __future__ import annotations

from dataclasses import dataclass, field

from .detector import DetectorParams, nms, scan_dense
from .imagecore import GrayImage, adaptive_threshold
from .refiner import Corner, refine_all

__all__ = ["PipelineConfig", "detect", "default_threads"]


def default_threads() -> int:
    import os

    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class PipelineConfig:
    window: int = 31
    offset: int = 0
    detector: DetectorParams = field(default_factory=DetectorParams)
    fit: str = "linear"
    threads: int = 1

    def __post_init__(self):
        if self.fit not in ("linear", "quadratic"):
            raise ValueError(f"fit must be 'linear' or 'quadratic', got {self.fit!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        d = {"window": self.window, "offset": self.offset, "fit": self.fit}
        d.update(self.detector.to_dict())
        return d


def detect(gray: GrayImage, config: PipelineConfig | None = None) -> list[Corner]:
    """Refined corners of a gray image, sorted by (y, x)."""
    cfg = config or PipelineConfig()
    binary = adaptive_threshold(gray, cfg.window, cfg.offset)
    dense = scan_dense(binary, cfg.detector, cfg.threads)
    candidates = nms(dense, cfg.detector.nms_radius)
    corners = refine_all(binary, gray, candidates, cfg.fit, cfg.threads)
    return sorted(corners, key=lambda c: (c.y, c.x))
