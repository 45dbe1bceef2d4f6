import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cmpcorner import GrayImage, SynthConfig, generate

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def quadrant_image(size: int = 21, center=(10, 10), literal: bool = False) -> np.ndarray:
    """0/255 ideal corner at a pixel center.

    Black quadrants are (dx > 0, dy >= 0) and (dx < 0, dy <= 0), which is
    symmetric under a half turn. ``literal`` uses (dx <= 0, dy < 0) for the
    second quadrant instead.
    """
    ys, xs = np.mgrid[0:size, 0:size]
    dx, dy = xs - center[0], ys - center[1]
    second = ((dx <= 0) & (dy < 0)) if literal else ((dx < 0) & (dy <= 0))
    black = ((dx > 0) & (dy >= 0)) | second
    return np.where(black, 0, 255).astype(np.uint8)


def checkerboard(size: int = 64, cell: int = 8) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size]
    return np.where(((xs // cell) + (ys // cell)) % 2 == 0, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def grid20():
    return generate(SynthConfig(grid=20, cell_px=16, seed=1))


@pytest.fixture(scope="session")
def twisted20():
    from cmpcorner import DeformSpec

    cfg = SynthConfig(
        grid=20, cell_px=16, seed=3, deform=DeformSpec("twist", 4.0), noise_sigma=6, corrosion_radius=1.5
    )
    return generate(cfg)


@pytest.fixture
def gray_from():
    return lambda arr: GrayImage(np.ascontiguousarray(arr, dtype=np.uint8))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
