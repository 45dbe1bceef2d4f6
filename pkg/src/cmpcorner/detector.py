"""Fast corner filtering, symmetrical response and non-maximum suppression.

The per-signal functions here are the readable reference forms. ``scan``
runs the same chain through a compiled kernel over row stripes; the test
suite checks the two agree pixel for pixel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from . import _kernels
from .imagecore import BLACK, MIN_DETECT_SIZE, _as_pixels
from .sampler import (
    DETECT_MARGIN,
    SIGNAL_LENGTH,
    MarginError,
    as_signal,
    corrosion_offsets,
    count_corrosion_black,
    inner_ring,
    outer_ring,
    sample_ring,
)

__all__ = [
    "DetectorParams",
    "CornerCandidate",
    "SectorRuns",
    "Verdict",
    "ResponseMap",
    "REJECT_REASONS",
    "transition_count_inner",
    "transition_count_outer",
    "sector_runs",
    "sector_delta",
    "xor_distance",
    "corrosion_degree",
    "evaluate_pixel",
    "scan",
    "nms",
]

REJECT_REASONS = ("outer_transitions", "inner_transitions", "symmetry", "xor", "corrosion")


@dataclass(frozen=True)
class DetectorParams:
    delta_th: int = 5
    d_th: int = 5
    cd_th: int = 4
    nms_radius: int = 3

    def __post_init__(self):
        if self.delta_th < 1:
            raise ValueError("delta_th must be >= 1")
        if self.d_th < 0:
            raise ValueError("d_th must be >= 0")
        if self.cd_th < 0:
            raise ValueError("cd_th must be >= 0")
        if self.nms_radius < 1:
            raise ValueError("nms_radius must be >= 1")

    def to_dict(self) -> dict:
        return {
            "delta_th": self.delta_th,
            "d_th": self.d_th,
            "cd_th": self.cd_th,
            "nms_radius": self.nms_radius,
        }


@dataclass(frozen=True)
class CornerCandidate:
    x: int
    y: int
    response: int


@dataclass(frozen=True)
class SectorRuns:
    """Circular runs starting at the first run boundary after index 0.

    ``runs`` holds ``(color, length)`` pairs, color 1 = black.
    """

    runs: tuple[tuple[int, int], ...]

    @property
    def black(self) -> tuple[int, ...]:
        return tuple(n for c, n in self.runs if c == 1)

    @property
    def white(self) -> tuple[int, ...]:
        return tuple(n for c, n in self.runs if c == 0)

    @property
    def delta_b(self) -> int:
        b = self.black
        if len(b) != 2:
            raise ValueError("sector differences need exactly two runs per color")
        return abs(b[0] - b[1])

    @property
    def delta_w(self) -> int:
        w = self.white
        if len(w) != 2:
            raise ValueError("sector differences need exactly two runs per color")
        return abs(w[0] - w[1])


class Verdict(NamedTuple):
    response: int  # 0 when rejected
    reason: str | None  # first failed criterion, None when accepted

    @property
    def accepted(self) -> bool:
        return self.reason is None


# --------------------------------------------------------------------------
# Criteria on ring signals


def transition_count_inner(g) -> int:
    bits = as_signal(g)
    n = SIGNAL_LENGTH
    return sum(1 for i in range(n) if bits[i] != bits[(i + 1) % n])


def transition_count_outer(g) -> int:
    """Transitions that survive the one-sample spike filter."""
    bits = as_signal(g)
    n = SIGNAL_LENGTH
    return sum(
        1 for i in range(n) if bits[i] != bits[(i + 1) % n] and bits[i] != bits[(i + 2) % n]
    )


def sector_runs(g) -> SectorRuns:
    bits = as_signal(g)
    n = SIGNAL_LENGTH
    boundaries = [i for i in range(n) if bits[i] != bits[(i + 1) % n]]
    if not boundaries:
        return SectorRuns(((int(bits[0]), n),))
    runs = []
    for a, b in zip(boundaries, boundaries[1:] + [boundaries[0] + n]):
        runs.append((int(bits[(a + 1) % n]), b - a))
    return SectorRuns(tuple(runs))


def sector_delta(g) -> int:
    """max(delta_b, delta_w) of a four-run signal."""
    if transition_count_inner(g) != 4:
        raise ValueError("sector_delta needs exactly four runs (two black, two white)")
    runs = sector_runs(g)
    return max(runs.delta_b, runs.delta_w)


def xor_distance(g1, g2) -> int:
    return int(np.count_nonzero(as_signal(g1) ^ as_signal(g2)))


def corrosion_degree(n1: int, n_r: int) -> int:
    if not 0 <= n1 <= SIGNAL_LENGTH:
        raise ValueError(f"n1 must lie in [0, 16], got {n1}")
    if not 0 <= n_r <= len(corrosion_offsets()):
        raise ValueError(f"n_r must lie in [0, 21], got {n_r}")
    return max(n1 - n_r, n_r - n1 - 9)


def evaluate_pixel(img, x: int, y: int, params: DetectorParams | None = None) -> Verdict:
    """Run the full criterion chain at one pixel of a binary image."""
    params = params or DetectorParams()
    px = _as_pixels(img)
    h, w = px.shape
    if not (DETECT_MARGIN <= x < w - DETECT_MARGIN and DETECT_MARGIN <= y < h - DETECT_MARGIN):
        raise MarginError(f"({x}, {y}) is within {DETECT_MARGIN} px of the border")
    g1 = sample_ring(px, (x, y), outer_ring())
    if transition_count_outer(g1) != 4:
        return Verdict(0, "outer_transitions")
    g2 = sample_ring(px, (x, y), inner_ring())
    if transition_count_inner(g2) != 4:
        return Verdict(0, "inner_transitions")
    delta2 = sector_delta(g2)
    if not delta2 < params.delta_th:
        return Verdict(0, "symmetry")
    if not xor_distance(g1, g2) < params.d_th:
        return Verdict(0, "xor")
    cd = corrosion_degree(int(g1.sum()), count_corrosion_black(px, (x, y)))
    if not cd < params.cd_th:
        return Verdict(0, "corrosion")
    return Verdict(params.delta_th - delta2, None)


# --------------------------------------------------------------------------
# Whole-image scan


class ResponseMap:
    """Sparse map pixel -> R, stored as row-major sorted coordinate arrays."""

    def __init__(self, shape: tuple[int, int], xs, ys, rs):
        self.shape = shape
        self.xs = np.asarray(xs, dtype=np.int64)
        self.ys = np.asarray(ys, dtype=np.int64)
        self.rs = np.asarray(rs, dtype=np.int64)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "ResponseMap":
        ys, xs = np.nonzero(dense)
        return cls(dense.shape, xs, ys, dense[ys, xs])

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple[int, int], int], shape=None) -> "ResponseMap":
        items = sorted(((y, x, r) for (x, y), r in mapping.items()))
        if shape is None:
            h = max((y for y, _, _ in items), default=-1) + 1
            w = max((x for _, x, _ in items), default=-1) + 1
            shape = (h, w)
        arr = np.array(items, dtype=np.int64).reshape(-1, 3)
        return cls(shape, arr[:, 1], arr[:, 0], arr[:, 2])

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.shape, dtype=np.int32)
        dense[self.ys, self.xs] = self.rs
        return dense

    def to_dict(self) -> dict[tuple[int, int], int]:
        return {(int(x), int(y)): int(r) for x, y, r in zip(self.xs, self.ys, self.rs)}

    def __len__(self) -> int:
        return int(self.rs.size)

    def __eq__(self, other):
        if not isinstance(other, ResponseMap):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.rs, other.rs)
        )


def _stripes(y0: int, y1: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, y1 - y0))
    edges = np.linspace(y0, y1, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def scan_dense(img, params: DetectorParams | None = None, threads: int = 1) -> np.ndarray:
    """Dense int32 response image; 0 marks rejected or border pixels."""
    params = params or DetectorParams()
    px = _as_pixels(img)
    h, w = px.shape
    if h < MIN_DETECT_SIZE or w < MIN_DETECT_SIZE:
        raise ValueError(f"image must be at least {MIN_DETECT_SIZE}x{MIN_DETECT_SIZE}")
    black = np.ascontiguousarray(px == BLACK, dtype=np.uint8)
    out = np.zeros((h, w), dtype=np.int32)
    m = DETECT_MARGIN
    args = (params.delta_th, params.d_th, params.cd_th)
    stripes = _stripes(m, h - m, threads)
    if threads <= 1 or len(stripes) == 1:
        _kernels.scan_rows(black, out, m, h - m, *args)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: _kernels.scan_rows(black, out, s[0], s[1], *args), stripes))
    return out


def scan(img, params: DetectorParams | None = None, threads: int = 1) -> ResponseMap:
    """Evaluate every interior pixel; identical output for any ``threads``."""
    return ResponseMap.from_dense(scan_dense(img, params, threads))


def nms(responses, nms_radius: int = 3) -> list[CornerCandidate]:
    """Keep strict local maxima; among tied maxima keep the row-major first.

    ``responses`` is a :class:`ResponseMap`, a ``{(x, y): R}`` mapping or a
    dense response array.
    """
    if nms_radius < 1:
        raise ValueError("nms_radius must be >= 1")
    if isinstance(responses, np.ndarray):
        dense = np.ascontiguousarray(responses, dtype=np.int32)
    else:
        if not isinstance(responses, ResponseMap):
            responses = ResponseMap.from_mapping(responses)
        dense = responses.to_dense()
    ys, xs = _kernels.nms_dense(dense, nms_radius)
    return [CornerCandidate(int(x), int(y), int(dense[y, x])) for y, x in zip(ys, xs)]
