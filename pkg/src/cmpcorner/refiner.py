"""Subpixel corner localization with the three-layer refinement sampler.

Each ring (radius 3, 4 and a gap-free radius 5) must cross exactly four
black/white boundaries. Boundary crossings are located to subpixel
precision on the gray image; the corner is then found from the sector
centerlines, falling back to the black-sector cusps, and finally to the
integer candidate.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .imagecore import BLACK, _as_pixels
from .sampler import Ring, dense_outer_ring, inner_ring, middle_ring

__all__ = [
    "Corner",
    "EdgePoint",
    "RefinementFailure",
    "refinement_rings",
    "find_edge_points",
    "midpoint_refine",
    "edgepoint_refine",
    "refine",
    "refine_all",
    "MAX_SHIFT",
]

MAX_SHIFT = _kernels.MAX_SHIFT
REFINE_MARGIN = 7
METHODS = {
    _kernels.UNREFINED: "unrefined",
    _kernels.MIDPOINT: "midpoint",
    _kernels.EDGEPOINT: "edgepoint",
}


class RefinementFailure(ValueError):
    """The refinement sampler did not see a four-sector pattern."""


@dataclass(frozen=True)
class Corner:
    x: float
    y: float
    response: int
    method: str  # midpoint | edgepoint | unrefined


@dataclass(frozen=True)
class EdgePoint:
    x: float
    y: float
    ring: int  # 0 inner, 1 middle, 2 outer
    rising: bool  # white -> black when walking clockwise


def refinement_rings() -> tuple[Ring, Ring, Ring]:
    return inner_ring(), middle_ring(), dense_outer_ring()


def _center(candidate) -> tuple[int, int]:
    if hasattr(candidate, "x"):
        return int(candidate.x), int(candidate.y)
    return int(candidate[0]), int(candidate[1])


def _black(bin_img) -> np.ndarray:
    return np.ascontiguousarray(_as_pixels(bin_img) == BLACK, dtype=np.uint8)


def _gray(gray_img) -> np.ndarray:
    return np.ascontiguousarray(_as_pixels(gray_img), dtype=np.uint8)


def find_edge_points(bin_img, gray_img, candidate) -> list[EdgePoint]:
    """The 12 subpixel boundary crossings (4 per ring), ring by ring.

    Within each ring the points run clockwise starting at a white->black
    crossing, and rings are rotated so that index k refers to the same
    boundary on every ring. Raises :class:`RefinementFailure` when a ring
    does not show exactly four crossings.
    """
    black = _black(bin_img)
    gray = _gray(gray_img)
    x, y = _center(candidate)
    h, w = black.shape
    if not (REFINE_MARGIN <= x < w - REFINE_MARGIN and REFINE_MARGIN <= y < h - REFINE_MARGIN):
        raise RefinementFailure(f"candidate ({x}, {y}) closer than {REFINE_MARGIN} px to the border")
    pts = np.empty((3, 4, 2))
    rising = np.empty((3, 4), dtype=np.bool_)
    (dx0, dy0), (dx1, dy1), (dx2, dy2) = _kernels.REF_RINGS
    if not _kernels.collect_edges(gray, black, x, y, dx0, dy0, dx1, dy1, dx2, dy2, pts, rising):
        raise RefinementFailure(f"a refinement ring at ({x}, {y}) does not cross exactly 4 boundaries")
    # alignment may rotate rings 1 and 2 by two edges; polarity pattern is unchanged
    return [
        EdgePoint(x + pts[r, k, 0], y + pts[r, k, 1], r, k % 2 == 0)
        for r in range(3)
        for k in range(4)
    ]


def _relative(edge_points, candidate) -> np.ndarray:
    x, y = _center(candidate)
    pts = np.empty((3, 4, 2))
    counts = [0, 0, 0]
    for ep in edge_points:
        k = counts[ep.ring]
        if k >= 4:
            raise ValueError("expected exactly 4 edge points per ring")
        pts[ep.ring, k] = (ep.x - x, ep.y - y)
        counts[ep.ring] += 1
    if counts != [4, 4, 4]:
        raise ValueError(f"expected 4 edge points per ring, got {counts}")
    return pts


def _solve(solver, edge_points, candidate, fit):
    if fit not in ("linear", "quadratic"):
        raise ValueError(f"fit must be 'linear' or 'quadratic', got {fit!r}")
    pts = _relative(edge_points, candidate)
    _kernels.align_rings(pts)
    ok, qx, qy = solver(pts, fit == "quadratic")
    if not ok:
        return None
    x, y = _center(candidate)
    return x + qx, y + qy


def midpoint_refine(edge_points, candidate, fit: str = "linear"):
    """Corner from the sector centerlines, or None when degenerate.

    ``candidate`` is the integer ring center the edge points were sampled
    around.
    """
    return _solve(_kernels.midpoint_solve, edge_points, candidate, fit)


def edgepoint_refine(edge_points, candidate, fit: str = "linear"):
    """Midpoint of the two black-sector cusps, or None when degenerate."""
    return _solve(_kernels.edgepoint_solve, edge_points, candidate, fit)


def refine(bin_img, gray_img, candidate, fit: str = "linear") -> Corner:
    x, y = _center(candidate)
    response = int(getattr(candidate, "response", 0))
    try:
        edges = find_edge_points(bin_img, gray_img, candidate)
    except RefinementFailure:
        return Corner(float(x), float(y), response, "unrefined")
    p = midpoint_refine(edges, (x, y), fit)
    if p is not None:
        return Corner(p[0], p[1], response, "midpoint")
    p = edgepoint_refine(edges, (x, y), fit)
    if p is not None:
        return Corner(p[0], p[1], response, "edgepoint")
    return Corner(float(x), float(y), response, "unrefined")


def refine_all(bin_img, gray_img, candidates, fit: str = "linear", threads: int = 1) -> list[Corner]:
    """Refine many candidates; output order follows ``candidates``."""
    if fit not in ("linear", "quadratic"):
        raise ValueError(f"fit must be 'linear' or 'quadratic', got {fit!r}")
    candidates = list(candidates)
    n = len(candidates)
    if n == 0:
        return []
    black = _black(bin_img)
    gray = _gray(gray_img)
    xs = np.array([c.x for c in candidates], dtype=np.int64)
    ys = np.array([c.y for c in candidates], dtype=np.int64)
    out_x = np.empty(n)
    out_y = np.empty(n)
    out_m = np.empty(n, dtype=np.int64)
    quad = fit == "quadratic"
    if threads <= 1 or n < 2 * threads:
        _kernels.refine_many(gray, black, xs, ys, quad, out_x, out_y, out_m, 0, n)
    else:
        bounds = np.linspace(0, n, threads + 1).round().astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(
                pool.map(
                    lambda ab: _kernels.refine_many(gray, black, xs, ys, quad, out_x, out_y, out_m, ab[0], ab[1]),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
    return [
        Corner(float(out_x[i]), float(out_y[i]), int(c.response), METHODS[int(out_m[i])])
        for i, c in enumerate(candidates)
    ]
