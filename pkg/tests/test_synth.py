import hashlib
import math

import numpy as np
import pytest

from cmpcorner import DeformSpec, SynthConfig, adaptive_threshold, generate, warp_point
from cmpcorner.synth import DARK, LIGHT, max_displacement_gradient, render_stripe, warp_points

GOLDEN = {
    "clean": (
        SynthConfig(grid=20, cell_px=16, seed=1),
        "8459dcf220239530e8c599616c7da43c2a1d217b54fcf8eeb5970e018dfa0009",
        "c941403bd246edbd127457162c07cf99aadef0cc60336acba16bbae23fabd2ab",
    ),
    "twist": (
        SynthConfig(
            grid=10, cell_px=12, seed=7, deform=DeformSpec("twist", 3.0),
            noise_sigma=5, corrosion_radius=1.5, illumination_ramp=0.05,
        ),
        "38e9646798732b84906d5df37783561048c7f8be85acf2436403fd5246a81e89",
        "3dc6c52d1dcbc9fac447e0f11cf5c79a3c5a0021cbe6f059520e30563710a31c",
    ),
}


def sha(arr) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(grid=1),
            dict(cell_px=6),
            dict(noise_sigma=-1),
            dict(corrosion_radius=-0.5),
            dict(seed=-1),
            dict(width=100),
            dict(deform=DeformSpec("press", 8.0)),  # = cell_px / 2
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SynthConfig(**kwargs)

    def test_gradient_bound(self):
        # below cell_px / 2 but too steep for a narrow window
        with pytest.raises(ValueError):
            SynthConfig(deform=DeformSpec("press", 7.0, radius=0.03))

    def test_deform_spec(self):
        with pytest.raises(ValueError):
            DeformSpec("squash", 1.0)
        with pytest.raises(ValueError):
            DeformSpec("press", -1.0)

    def test_dict_round_trip(self):
        cfg = GOLDEN["twist"][0]
        assert SynthConfig.from_dict(cfg.to_dict()) == cfg

    def test_dims(self):
        cfg = SynthConfig(grid=45, cell_px=10, width=640, height=480)
        assert cfg.dims == (640, 480)


class TestGenerate:
    def test_lattice_positions(self):
        cfg = SynthConfig(grid=20, cell_px=16, seed=1)
        _, gt = generate(cfg)
        assert len(gt) == 19 * 19
        ox, oy = cfg.origin
        for (x, y), (i, j) in zip(gt.corners, gt.indices):
            assert (x, y) == (ox + j * 16, oy + i * 16)
        assert gt.corners.min() >= 7

    def test_deterministic(self):
        cfg = GOLDEN["twist"][0]
        a, ga = generate(cfg)
        b, gb = generate(cfg)
        assert a.pixels.tobytes() == b.pixels.tobytes()
        assert np.array_equal(ga.corners, gb.corners)

    def test_seed_changes_noise(self):
        cfg = GOLDEN["twist"][0]
        assert generate(cfg)[0].pixels.tobytes() != generate(cfg.with_seed(8))[0].pixels.tobytes()

    @pytest.mark.parametrize("name", sorted(GOLDEN))
    def test_golden_hashes(self, name):
        cfg, img_hash, gt_hash = GOLDEN[name]
        img, gt = generate(cfg)
        assert sha(img.pixels) == img_hash
        assert sha(gt.corners) == gt_hash

    @pytest.mark.parametrize("mode", ["press", "shear", "twist"])
    def test_truth_is_warped_lattice(self, mode):
        cfg = SynthConfig(grid=12, cell_px=12, deform=DeformSpec(mode, 3.0, (0.45, 0.55), 0.3, 0.7))
        _, gt = generate(cfg)
        ox, oy = cfg.origin
        for (x, y), (i, j) in zip(gt.corners, gt.indices):
            assert (x, y) == warp_point(cfg.deform, (ox + j * 12, oy + i * 12), cfg.dims)

    def test_press_max_displacement(self):
        a = 5.0
        cfg = SynthConfig(grid=20, cell_px=16, deform=DeformSpec("press", a))
        _, gt = generate(cfg)
        base = generate(SynthConfig(grid=20, cell_px=16))[1].corners
        disp = np.linalg.norm(gt.corners - base, axis=1)
        assert disp.max() <= a + 1e-12
        assert disp.max() >= 0.95 * a

    def test_clean_binarizes_to_mask(self):
        cfg = SynthConfig(grid=10, cell_px=16)
        img, _ = generate(cfg)
        binary = adaptive_threshold(img, 31).pixels
        w, h = cfg.dims
        ox, oy = cfg.origin
        ys, xs = np.mgrid[0:h, 0:w]
        u, v = (xs - ox) / 16, (ys - oy) / 16
        inside = (u > 0) & (u < 10) & (v > 0) & (v < 10)
        black = ((np.floor(u) + np.floor(v)) % 2 == 0) & inside
        # skip the anti-aliased band: pixels within 1 px of a cell boundary
        fu, fv = (xs - ox) % 16, (ys - oy) % 16
        band = (np.minimum(fu, 16 - fu) < 1) | (np.minimum(fv, 16 - fv) < 1)
        core = inside & ~band
        assert np.array_equal(binary[core] == 0, black[core])

    def test_intensity_levels(self):
        img, _ = generate(SynthConfig(grid=4, cell_px=16))
        assert set(np.unique(img.pixels)) <= set(range(DARK, LIGHT + 1))
        assert img.pixels.min() == DARK and img.pixels.max() == LIGHT

    def test_corrosion_is_local(self):
        base = generate(SynthConfig(grid=6, cell_px=16))[0].pixels.astype(int)
        blurred, gt = generate(SynthConfig(grid=6, cell_px=16, corrosion_radius=2.0))
        diff = np.argwhere(blurred.pixels.astype(int) != base)
        assert len(diff)
        d = np.min(np.linalg.norm(diff[:, None, ::-1] - gt.corners[None], axis=2), axis=1)
        assert d.max() <= 2.0


class TestWarp:
    dims = (320, 320)

    def test_identity(self):
        assert warp_point(DeformSpec(), (12.3, 45.6), self.dims) == (12.3, 45.6)

    def test_twist_center_fixed(self):
        d = DeformSpec("twist", 4.0, (0.5, 0.5))
        assert warp_point(d, (160.0, 160.0), self.dims) == (160.0, 160.0)

    def test_press_rim_peak(self):
        # the radial profile (r / sigma) exp((1 - r^2 / sigma^2) / 2) peaks at the rim
        d = DeformSpec("press", 4.0, (0.5, 0.5), 0.25)
        sigma = 80.0
        x, y = warp_point(d, (160.0 + sigma, 160.0), self.dims)
        assert (x - 160 - sigma, y - 160) == pytest.approx((4.0, 0.0))
        rs = np.linspace(1, 300, 2000)
        pts = np.stack([160 + rs, np.full_like(rs, 160.0)], axis=1)
        mags = np.linalg.norm(warp_points(d, pts, self.dims) - pts, axis=1)
        assert mags.max() == pytest.approx(4.0, abs=1e-4)

    def test_shear_center(self):
        d = DeformSpec("shear", 3.0, (0.5, 0.5), 0.25, direction=math.pi / 2)
        x, y = warp_point(d, (160.0, 160.0), self.dims)
        assert (x, y) == pytest.approx((160.0, 163.0))

    @pytest.mark.parametrize("mode", ["press", "shear", "twist"])
    def test_gradient_bound_holds(self, mode):
        d = DeformSpec(mode, 4.0, (0.4, 0.6), 0.2, 1.1)
        bound = max_displacement_gradient(d, self.dims)
        rng = np.random.default_rng(0)
        p = rng.uniform(0, 320, size=(4000, 2))
        h = 1e-4
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            du = (warp_points(d, p + e, self.dims) - (p + e)) - (warp_points(d, p - e, self.dims) - (p - e))
            assert np.abs(du / (2 * h)).max() <= bound + 1e-6


class TestRenderers:
    def test_stripe_symmetric(self):
        img = render_stripe((21, 21), (10.0, 10.0), 0.0, 4).pixels
        assert np.array_equal(img, img[::-1])
        assert img[10, 10] == DARK and img[0, 10] == LIGHT
