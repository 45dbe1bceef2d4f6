"""Synthetic checkerboard marker images with exact ground-truth corners.

Cells are rendered by forward-warping their outlines through an analytic
displacement field and filling them on a 4x supersampled canvas, so every
ground-truth corner is exactly the warped lattice point. Corrosion blur,
an illumination ramp and seeded Gaussian noise are applied afterwards.

Coordinates follow the pixel-center convention: pixel (col, row) has its
center at (x, y) = (col, row).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter
from skimage.draw import polygon as fill_polygon

from .imagecore import GrayImage

__all__ = [
    "DeformSpec",
    "SynthConfig",
    "GroundTruth",
    "warp_point",
    "warp_points",
    "generate",
    "render_junction",
    "render_stripe",
    "max_displacement_gradient",
    "DEFORM_MODES",
]

DEFORM_MODES = ("none", "press", "shear", "twist")
SUPERSAMPLE = 4
DARK = 30
LIGHT = 220
_E_HALF = math.exp(0.5)


@dataclass(frozen=True)
class DeformSpec:
    """Gaussian-windowed displacement field.

    ``amplitude`` is the peak displacement in pixels: radial for press,
    along ``direction`` (radians) for shear, tangential for twist. The
    window is centered at ``center`` (fractions of image width/height) with
    ``radius`` as a fraction of the shorter image side.
    """

    mode: str = "none"
    amplitude: float = 0.0
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25
    direction: float = 0.0

    def __post_init__(self):
        if self.mode not in DEFORM_MODES:
            raise ValueError(f"deform mode must be one of {DEFORM_MODES}, got {self.mode!r}")
        if self.amplitude < 0:
            raise ValueError("deform amplitude must be >= 0")
        if self.radius <= 0:
            raise ValueError("deform radius must be > 0")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        for name in ("amplitude", "radius", "direction"):
            object.__setattr__(self, name, float(getattr(self, name)))


def _field_geometry(deform: DeformSpec, dims) -> tuple[float, float, float]:
    w, h = dims
    return deform.center[0] * w, deform.center[1] * h, deform.radius * min(w, h)


def warp_points(deform: DeformSpec, pts, dims) -> np.ndarray:
    """Apply the displacement field to an (n, 2) array of (x, y) points."""
    p = np.asarray(pts, dtype=float)
    if deform.mode == "none" or deform.amplitude == 0:
        return p.copy()
    cx, cy, sigma = _field_geometry(deform, dims)
    dx = p[..., 0] - cx
    dy = p[..., 1] - cy
    q = (dx * dx + dy * dy) / (sigma * sigma)
    a = deform.amplitude
    out = p.copy()
    if deform.mode == "press":
        # radial, |u| = a (r/sigma) exp((1 - r^2/sigma^2)/2), peak a at r = sigma
        k = a / sigma * np.exp(0.5 * (1.0 - q))
        out[..., 0] += k * dx
        out[..., 1] += k * dy
    elif deform.mode == "twist":
        k = a / sigma * np.exp(0.5 * (1.0 - q))
        out[..., 0] += -k * dy
        out[..., 1] += k * dx
    elif deform.mode == "shear":
        k = a * np.exp(-0.5 * q)
        out[..., 0] += k * math.cos(deform.direction)
        out[..., 1] += k * math.sin(deform.direction)
    return out


def warp_point(deform: DeformSpec, p, dims) -> tuple[float, float]:
    x, y = warp_points(deform, np.asarray(p, dtype=float)[None, :], dims)[0]
    return float(x), float(y)


def max_displacement_gradient(deform: DeformSpec, dims) -> float:
    """Upper bound on the Jacobian norm of the displacement field."""
    if deform.mode == "none" or deform.amplitude == 0:
        return 0.0
    sigma = _field_geometry(deform, dims)[2]
    if deform.mode == "shear":
        return deform.amplitude / sigma * math.exp(-0.5)
    return deform.amplitude / sigma * _E_HALF


@dataclass(frozen=True)
class SynthConfig:
    grid: int = 20
    cell_px: int = 16
    deform: DeformSpec = field(default_factory=DeformSpec)
    corrosion_radius: float = 0.0
    noise_sigma: float = 0.0
    illumination_ramp: float = 0.0
    seed: int = 0
    margin: int = 8
    width: int | None = None
    height: int | None = None

    def __post_init__(self):
        if isinstance(self.deform, dict):
            object.__setattr__(self, "deform", DeformSpec(**self.deform))
        # floats stay floats so equal configs serialize identically
        for name in ("corrosion_radius", "noise_sigma", "illumination_ramp"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.grid < 2:
            raise ValueError("grid must be >= 2")
        if self.cell_px < 8:
            raise ValueError("cell_px must be >= 8")
        if self.corrosion_radius < 0 or self.noise_sigma < 0:
            raise ValueError("corrosion_radius and noise_sigma must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        w, h = self.dims
        board = self.grid * self.cell_px
        if w < board + 2 * self.margin or h < board + 2 * self.margin:
            raise ValueError(f"image {w}x{h} too small for a {board}px board with {self.margin}px margin")
        if self.deform.amplitude >= self.cell_px / 2:
            raise ValueError(
                f"deform amplitude {self.deform.amplitude} must stay below cell_px/2 = {self.cell_px / 2}"
            )
        if max_displacement_gradient(self.deform, self.dims) >= 0.5:
            raise ValueError("deformation too strong to stay invertible; lower amplitude or widen radius")

    @property
    def dims(self) -> tuple[int, int]:
        board = self.grid * self.cell_px
        w = self.width if self.width is not None else board + 2 * self.margin
        h = self.height if self.height is not None else board + 2 * self.margin
        return int(w), int(h)

    @property
    def origin(self) -> tuple[float, float]:
        """Undeformed position of lattice point (0, 0); lies on a pixel boundary."""
        w, h = self.dims
        board = self.grid * self.cell_px
        return (w - board) // 2 - 0.5, (h - board) // 2 - 0.5

    def to_dict(self) -> dict:
        d = asdict(self)
        d["deform"]["center"] = list(d["deform"]["center"])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        data = dict(data)
        if "deform" in data and isinstance(data["deform"], dict):
            dd = dict(data["deform"])
            if "center" in dd:
                dd["center"] = tuple(dd["center"])
            data["deform"] = DeformSpec(**dd)
        return cls(**data)

    def with_seed(self, seed: int) -> "SynthConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class GroundTruth:
    corners: np.ndarray  # (n, 2) float x, y
    indices: np.ndarray  # (n, 2) int lattice row i, column j

    def __len__(self) -> int:
        return int(self.corners.shape[0])

    def to_dict(self) -> list[dict]:
        return [
            {"x": float(x), "y": float(y), "i": int(i), "j": int(j)}
            for (x, y), (i, j) in zip(self.corners, self.indices)
        ]


def _lattice(cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    ox, oy = cfg.origin
    n = cfg.grid + 1
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    pts = np.stack([ox + jj * cfg.cell_px, oy + ii * cfg.cell_px], axis=-1).astype(float)
    return pts, np.stack([ii, jj], axis=-1)


def _cell_outline(corners: np.ndarray, subdiv: int) -> np.ndarray:
    """Closed outline through the 4 corners with each side subdivided."""
    t = np.arange(subdiv)[:, None] / subdiv
    sides = [corners[k] + t * (corners[(k + 1) % 4] - corners[k]) for k in range(4)]
    return np.concatenate(sides)


def _coverage(cfg: SynthConfig) -> np.ndarray:
    """Fraction of each pixel covered by black cells."""
    w, h = cfg.dims
    s = SUPERSAMPLE
    canvas = np.zeros((h * s, w * s), dtype=np.uint8)
    lattice, _ = _lattice(cfg)
    subdiv = max(2, cfg.cell_px // 4) if cfg.deform.mode != "none" else 1
    for i in range(cfg.grid):
        for j in range(cfg.grid):
            if (i + j) % 2:
                continue
            quad = np.array([lattice[i, j], lattice[i, j + 1], lattice[i + 1, j + 1], lattice[i + 1, j]])
            outline = warp_points(cfg.deform, _cell_outline(quad, subdiv), cfg.dims)
            # continuous x -> supersample index: (x + 0.5) * s - 0.5
            rr, cc = fill_polygon((outline[:, 1] + 0.5) * s - 0.5, (outline[:, 0] + 0.5) * s - 0.5, canvas.shape)
            canvas[rr, cc] = 1
    return canvas.reshape(h, s, w, s).mean(axis=(1, 3))


def generate(cfg: SynthConfig) -> tuple[GrayImage, GroundTruth]:
    w, h = cfg.dims
    cover = _coverage(cfg)
    img = LIGHT - (LIGHT - DARK) * cover

    lattice, idx = _lattice(cfg)
    inner = lattice[1:-1, 1:-1].reshape(-1, 2)
    indices = idx[1:-1, 1:-1].reshape(-1, 2)
    corners = warp_points(cfg.deform, inner, cfg.dims)

    if cfg.corrosion_radius > 0:
        blurred = gaussian_filter(img, sigma=cfg.corrosion_radius, mode="nearest")
        yy, xx = np.mgrid[0:h, 0:w]
        mask = np.zeros((h, w), dtype=bool)
        r = cfg.corrosion_radius
        reach = int(math.ceil(r)) + 1
        for cx, cy in corners:
            x0, x1 = max(0, int(cx) - reach), min(w, int(cx) + reach + 2)
            y0, y1 = max(0, int(cy) - reach), min(h, int(cy) + reach + 2)
            sub = (xx[y0:y1, x0:x1] - cx) ** 2 + (yy[y0:y1, x0:x1] - cy) ** 2 <= r * r
            mask[y0:y1, x0:x1] |= sub
        img = np.where(mask, blurred, img)

    if cfg.illumination_ramp:
        img = img + cfg.illumination_ramp * (np.arange(w)[None, :] - (w - 1) / 2)

    if cfg.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        img = img + rng.standard_normal((h, w)) * cfg.noise_sigma

    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    margin_ok = (
        (corners[:, 0] >= 7) & (corners[:, 1] >= 7) & (corners[:, 0] <= w - 8) & (corners[:, 1] <= h - 8)
    )
    if not margin_ok.all():
        raise ValueError("deformed corners leave the 7 px image margin")
    return GrayImage(pixels), GroundTruth(corners, indices)


# --------------------------------------------------------------------------
# Single-feature renderers


def _supersample_grid(shape, ss):
    h, w = shape
    offs = (np.arange(ss) + 0.5) / ss - 0.5
    ys = (np.arange(h)[:, None] + offs[None, :]).ravel()
    xs = (np.arange(w)[:, None] + offs[None, :]).ravel()
    return np.meshgrid(xs, ys)


def _in_wedge(px, py, apex, a0, a1):
    """Points whose bearing from ``apex`` lies clockwise from a0 to a1."""
    ang = np.mod(np.arctan2(py - apex[1], px - apex[0]) - a0, 2 * np.pi)
    return ang < np.mod(a1 - a0, 2 * np.pi)


def render_junction(
    shape,
    center,
    angles=(0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi),
    gap: float = 0.0,
    dark: int = DARK,
    light: int = LIGHT,
    ss: int = 8,
) -> GrayImage:
    """Anti-aliased X-junction.

    ``angles`` are the four boundary bearings (clockwise from east, y down);
    sectors angles[0]->angles[1] and angles[2]->angles[3] are black. With
    ``gap`` > 0 each black sector is pushed ``gap`` px outward along its
    bisector, leaving a white corrosion gap around ``center``.
    """
    a = [float(v) for v in angles]
    px, py = _supersample_grid(shape, ss)
    black = np.zeros(px.shape, dtype=bool)
    for a0, a1 in ((a[0], a[1]), (a[2], a[3])):
        mid = a0 + 0.5 * np.mod(a1 - a0, 2 * np.pi)
        apex = (center[0] + gap * math.cos(mid), center[1] + gap * math.sin(mid))
        black |= _in_wedge(px, py, apex, a0, a1)
    h, w = shape
    cover = black.reshape(h, ss, w, ss).mean(axis=(1, 3))
    return GrayImage(np.clip(np.rint(light - (light - dark) * cover), 0, 255).astype(np.uint8))


def render_stripe(shape, center, angle: float, width: float, dark: int = DARK, light: int = LIGHT, ss: int = 8) -> GrayImage:
    """Anti-aliased black band of ``width`` px through ``center`` along bearing ``angle``."""
    px, py = _supersample_grid(shape, ss)
    nx, ny = -math.sin(angle), math.cos(angle)
    dist = np.abs((px - center[0]) * nx + (py - center[1]) * ny)
    h, w = shape
    cover = (dist <= width / 2).reshape(h, ss, w, ss).mean(axis=(1, 3))
    return GrayImage(np.clip(np.rint(light - (light - dark) * cover), 0, 255).astype(np.uint8))
