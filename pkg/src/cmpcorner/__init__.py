"""Corner detection for continuous marker patterns (CMP) on deformable tactile sensors."""

from .detector import CornerCandidate, DetectorParams, ResponseMap, evaluate_pixel, nms, scan
from .imagecore import (
    BinaryImage,
    GrayImage,
    PgmError,
    adaptive_threshold,
    encode_pgm,
    load_pgm,
    parse_pgm,
    save_pgm,
)
from .pipeline import PipelineConfig, detect
from .refiner import Corner, refine, refine_all
from .synth import DeformSpec, GroundTruth, SynthConfig, generate, warp_point

__version__ = "0.1.0"

__all__ = [
    "BinaryImage",
    "Corner",
    "CornerCandidate",
    "DeformSpec",
    "DetectorParams",
    "GrayImage",
    "GroundTruth",
    "PgmError",
    "PipelineConfig",
    "ResponseMap",
    "SynthConfig",
    "adaptive_threshold",
    "detect",
    "encode_pgm",
    "evaluate_pixel",
    "generate",
    "load_pgm",
    "nms",
    "parse_pgm",
    "refine",
    "refine_all",
    "save_pgm",
    "scan",
    "warp_point",
]
