"""Image containers, PGM I/O and adaptive-threshold binarization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GrayImage",
    "BinaryImage",
    "PgmError",
    "load_pgm",
    "save_pgm",
    "load_png",
    "adaptive_threshold",
    "global_mean_threshold",
    "integral_image",
    "DEFAULT_WINDOWS",
    "MIN_DETECT_SIZE",
]

BLACK = 0
WHITE = 255

# Adaptive window per marker density (grid cells per side), odd-rounded.
DEFAULT_WINDOWS = {20: 41, 30: 31, 40: 21}

MIN_DETECT_SIZE = 16


class PgmError(ValueError):
    """Malformed or unsupported PGM input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _as_pixels(data) -> np.ndarray:
    if isinstance(data, (GrayImage, BinaryImage)):
        return data.pixels
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2-d, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, row-major, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"image must be 2-d, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in 0..255")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_bytes(cls, width: int, height: int, data) -> "GrayImage":
        buf = np.frombuffer(bytes(data), dtype=np.uint8)
        if buf.size != width * height:
            raise ValueError(f"expected {width * height} bytes, got {buf.size}")
        return cls(buf.reshape(height, width).copy())

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, (GrayImage, BinaryImage)):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


class BinaryImage(GrayImage):
    """Raster restricted to {0, 255}; 0 is black."""

    def __post_init__(self):
        super().__post_init__()
        px = self.pixels
        if not np.all((px == BLACK) | (px == WHITE)):
            raise ValueError("binary image values must be 0 or 255")

    def as_gray(self) -> GrayImage:
        return GrayImage(self.pixels)

    @property
    def black(self) -> np.ndarray:
        """Boolean mask, True where the pixel is black."""
        return self.pixels == BLACK


# --------------------------------------------------------------------------
# PGM


def _read_token(buf: bytes, pos: int, field: str) -> tuple[bytes, int]:
    n = len(buf)
    # skip whitespace and comments
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmError(field, "missing value in header")
    return buf[start:pos], pos


def _read_int(buf: bytes, pos: int, field: str) -> tuple[int, int]:
    tok, pos = _read_token(buf, pos, field)
    if not tok.isdigit():
        raise PgmError(field, f"not a non-negative integer: {tok!r}")
    return int(tok), pos


def parse_pgm(buf: bytes) -> GrayImage:
    """Decode a binary (P5) PGM with maxval 255."""
    if len(buf) < 2 or buf[:2] != b"P5":
        magic = buf[:2].decode("latin-1", "replace")
        raise PgmError("magic", f"unsupported magic {magic!r} (only P5 is accepted)")
    pos = 2
    width, pos = _read_int(buf, pos, "width")
    height, pos = _read_int(buf, pos, "height")
    maxval, pos = _read_int(buf, pos, "maxval")
    if width <= 0:
        raise PgmError("width", "must be positive")
    if height <= 0:
        raise PgmError("height", "must be positive")
    if maxval != 255:
        raise PgmError("maxval", f"unsupported maxval {maxval} (must be 255)")
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise PgmError("data", "missing whitespace after header")
    pos += 1
    need = width * height
    payload = buf[pos : pos + need]
    if len(payload) < need:
        raise PgmError("data", f"truncated: expected {need} bytes, got {len(payload)}")
    return GrayImage.from_bytes(width, height, payload)


def encode_pgm(img) -> bytes:
    px = _as_pixels(img)
    if px.dtype != np.uint8:
        px = GrayImage(px).pixels
    h, w = px.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(px).tobytes()


def load_pgm(path) -> GrayImage:
    path = Path(path)
    return parse_pgm(path.read_bytes())


def save_pgm(img, path) -> None:
    path = Path(path)
    try:
        path.write_bytes(encode_pgm(img))
    except OSError as exc:
        raise OSError(f"cannot write PGM to {path}: {exc.strerror or exc}") from exc


def load_png(path) -> GrayImage:
    """Read an 8-bit grayscale PNG. Needs Pillow; not used by the test contract."""
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("PNG input requires Pillow") from exc
    with Image.open(path) as im:
        if im.mode not in ("L", "1", "P", "RGB", "RGBA", "LA"):
            raise ValueError(f"unsupported PNG mode {im.mode}")
        return GrayImage(np.asarray(im.convert("L"), dtype=np.uint8))


# --------------------------------------------------------------------------
# Binarization


def integral_image(px: np.ndarray) -> np.ndarray:
    """Summed-area table with a leading zero row and column."""
    sat = np.zeros((px.shape[0] + 1, px.shape[1] + 1), dtype=np.int64)
    np.cumsum(px, axis=0, dtype=np.int64, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    return sat


def _window_sums(px: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    padded = np.pad(px, half, mode="edge")
    sat = integral_image(padded)
    h, w = px.shape
    return (
        sat[window : window + h, window : window + w]
        - sat[:h, window : window + w]
        - sat[window : window + h, :w]
        + sat[:h, :w]
    )


def adaptive_threshold(img, window: int = 31, offset: int = 0) -> BinaryImage:
    """Binarize against the local mean over an edge-clamped ``window`` square.

    A pixel becomes black (0) when its intensity is strictly below
    ``mean - offset``; ties go to white. The comparison is done on integer
    window sums, so it is exact.
    """
    px = _as_pixels(img)
    if px.dtype != np.uint8:
        px = GrayImage(px).pixels
    h, w = px.shape
    if window % 2 == 0:
        raise ValueError(f"window must be odd, got {window}")
    if window < 3 or window > min(w, h):
        raise ValueError(f"window must lie in [3, {min(w, h)}], got {window}")
    if not -64 <= offset <= 64:
        raise ValueError(f"offset must lie in [-64, 64], got {offset}")
    area = window * window
    sums = _window_sums(px, window)
    black = px.astype(np.int64) * area < sums - offset * area
    return BinaryImage(np.where(black, BLACK, WHITE).astype(np.uint8))


def global_mean_threshold(img) -> BinaryImage:
    """Single global-mean threshold; baseline for illumination tests."""
    px = _as_pixels(img)
    black = px.astype(np.float64) < px.mean()
    return BinaryImage(np.where(black, BLACK, WHITE).astype(np.uint8))
