"""Ring geometries and sampling of binary images along them.

Offsets are ``(dx, dy)`` in raster coordinates (y points down), ordered
clockwise on screen starting east. A sampled bit is 1 for black.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imagecore import BLACK, _as_pixels

__all__ = [
    "Ring",
    "RingSignal",
    "MarginError",
    "bresenham_circle",
    "inner_ring",
    "outer_ring",
    "middle_ring",
    "dense_outer_ring",
    "corrosion_offsets",
    "sample_ring",
    "count_corrosion_black",
    "as_signal",
    "signal_from_string",
    "signal_to_code",
    "signal_from_code",
    "DETECT_MARGIN",
]

SIGNAL_LENGTH = 16
DETECT_MARGIN = 6

# Alias: a ring signal is a length-16 uint8 array of 0/1 bits.
RingSignal = np.ndarray


class MarginError(ValueError):
    """Sampling center too close to the image border."""


@dataclass(frozen=True)
class Ring:
    radius: int
    offsets: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("ring offsets must be distinct")

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def dx(self) -> np.ndarray:
        return np.array([o[0] for o in self.offsets], dtype=np.intp)

    @property
    def dy(self) -> np.ndarray:
        return np.array([o[1] for o in self.offsets], dtype=np.intp)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.offsets, dtype=np.int64).reshape(-1, 2)

    def bearings(self) -> np.ndarray:
        """Clockwise angle of each offset from east, in [0, 2pi)."""
        arr = self.array.astype(float)
        return np.mod(np.arctan2(arr[:, 1], arr[:, 0]), 2 * np.pi)


def _clockwise(points) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(points, key=lambda p: math.atan2(p[1], p[0]) % (2 * math.pi)))


@lru_cache(maxsize=None)
def bresenham_circle(radius: int) -> Ring:
    """Midpoint-circle rasterization, clockwise from east."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    pts = set()
    x, y, err = radius, 0, 1 - radius
    while x >= y:
        for px, py in ((x, y), (y, x)):
            pts.update({(px, py), (-px, py), (px, -py), (-px, -py)})
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1
    return Ring(radius, _clockwise(pts))


@lru_cache(maxsize=None)
def inner_ring() -> Ring:
    """The 16-pixel radius-3 circle (FAST-16 geometry)."""
    return bresenham_circle(3)


_OUTER = (
    (5, 0), (5, 2), (4, 4), (2, 5), (0, 5), (-2, 5), (-4, 4), (-5, 2),
    (-5, 0), (-5, -2), (-4, -4), (-2, -5), (0, -5), (2, -5), (4, -4), (5, -2),
)  # fmt: skip


@lru_cache(maxsize=None)
def outer_ring() -> Ring:
    """Gapped 16-sample radius-5 ring, nearest integer points at 22.5 deg steps."""
    return Ring(5, _OUTER)


@lru_cache(maxsize=None)
def middle_ring() -> Ring:
    """Radius-4 Bresenham circle (24 pixels) used only for refinement."""
    return bresenham_circle(4)


@lru_cache(maxsize=None)
def dense_outer_ring() -> Ring:
    """Gap-free radius-5 Bresenham circle (28 pixels) used only for refinement."""
    return bresenham_circle(5)


@lru_cache(maxsize=None)
def corrosion_offsets() -> tuple[tuple[int, int], ...]:
    """The 21 pixels with dx^2 + dy^2 <= 5, row-major."""
    return tuple((dx, dy) for dy in range(-2, 3) for dx in range(-2, 3) if dx * dx + dy * dy <= 5)


def _check_margin(px: np.ndarray, x: int, y: int, reach: int) -> None:
    h, w = px.shape
    if x < reach or y < reach or x >= w - reach or y >= h - reach:
        raise MarginError(f"center ({x}, {y}) closer than {reach} px to the border of {w}x{h} image")


def sample_ring(img, center, ring: Ring) -> RingSignal:
    """Read ``ring`` around integer ``center=(x, y)``; 1 where the pixel is black."""
    px = _as_pixels(img)
    x, y = int(center[0]), int(center[1])
    _check_margin(px, x, y, ring.radius + 1)
    return (px[y + ring.dy, x + ring.dx] == BLACK).astype(np.uint8)


def count_corrosion_black(img, center) -> int:
    px = _as_pixels(img)
    x, y = int(center[0]), int(center[1])
    _check_margin(px, x, y, inner_ring().radius + 1)
    offs = np.array(corrosion_offsets())
    return int(np.count_nonzero(px[y + offs[:, 1], x + offs[:, 0]] == BLACK))


# --------------------------------------------------------------------------
# Signal helpers


def as_signal(bits) -> RingSignal:
    if isinstance(bits, str):
        return signal_from_string(bits)
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size != SIGNAL_LENGTH:
        raise ValueError(f"ring signal must have {SIGNAL_LENGTH} samples, got {arr.size}")
    if np.any(arr > 1):
        raise ValueError("ring signal samples must be 0 or 1")
    return arr


def signal_from_string(text: str) -> RingSignal:
    """``"1111000011110000"`` -> bits, index 0 first."""
    text = text.replace(" ", "")
    if len(text) != SIGNAL_LENGTH or set(text) - {"0", "1"}:
        raise ValueError(f"bad ring signal string {text!r}")
    return np.array([int(c) for c in text], dtype=np.uint8)


def signal_to_code(bits) -> int:
    """Pack bits into an integer, bit i = sample i."""
    arr = as_signal(bits)
    return int(np.dot(arr.astype(np.int64), 1 << np.arange(SIGNAL_LENGTH, dtype=np.int64)))


def signal_from_code(code: int) -> RingSignal:
    return ((int(code) >> np.arange(SIGNAL_LENGTH)) & 1).astype(np.uint8)
