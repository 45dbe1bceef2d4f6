import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmpcorner import PipelineConfig
from cmpcorner.evalbench import (
    DEFAULT_TOLERANCE,
    FrameResult,
    bench,
    clean_suite,
    deformed_suite,
    evaluate,
    match,
    summarize,
    synth_frames,
)
from cmpcorner.refiner import Corner

points = st.lists(st.tuples(st.floats(0, 30), st.floats(0, 30)), max_size=12)


def frame(name, fp=0, fn=0, n=10):
    return FrameResult(name, n - fn + fp, n, n - fn, fp, fn, 0.0, fp == 0 and fn == 0)


class TestMatch:
    def test_exact(self):
        truth = [(1.0, 2.0), (5.0, 5.0), (9.0, 1.0)]
        m = match(truth, truth)
        assert (m.tp, m.fp, m.fn) == (3, 0, 0)
        assert m.mean_error == 0.0

    def test_empty_detected(self):
        m = match([], [(1.0, 1.0), (2.0, 2.0)])
        assert (m.tp, m.fp, m.fn) == (0, 0, 2)

    def test_tie_prefers_lower_truth_index(self):
        m = match([(5.0, 5.0)], [(7.0, 5.0), (3.0, 5.0)], tol=3)
        assert m.pairs == ((0, 0),) and m.fn == 1

    def test_greedy_by_distance(self):
        # detected 0 is closer to truth 1 than detected 1 is; greedy takes it first
        m = match([(0.0, 0.0), (2.5, 0.0)], [(5.0, 0.0), (0.5, 0.0)], tol=3)
        assert set(m.pairs) == {(0, 1), (1, 0)}

    def test_tolerance_boundary(self):
        assert match([(0.0, 0.0)], [(3.0, 0.0)], tol=3).tp == 1
        assert match([(0.0, 0.0)], [(3.0001, 0.0)], tol=3).tp == 0

    def test_accepts_corner_objects(self):
        m = match([Corner(1.0, 1.0, 5, "midpoint")], np.array([[1.2, 1.0]]))
        assert m.tp == 1 and m.mean_error == pytest.approx(0.2)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            match([], [], tol=0)

    @given(points, points, st.floats(0.1, 10))
    def test_bookkeeping(self, det, truth, tol):
        m = match(det, truth, tol)
        assert m.tp + m.fp == len(det) and m.tp + m.fn == len(truth)
        assert len({j for _, j in m.pairs}) == m.tp == len({i for i, _ in m.pairs})
        assert all(d <= tol for d in m.distances)

    @given(points, points, st.floats(0.1, 5), st.floats(0.0, 5))
    def test_tp_monotone_in_tolerance(self, det, truth, tol, extra):
        assert match(det, truth, tol).tp <= match(det, truth, tol + extra).tp


class TestSummary:
    def test_all_perfect(self):
        r = summarize([frame(f"f{k}") for k in range(5)], 3.0)
        assert (r.sr, r.afp, r.afn) == (1.0, 0.0, 0.0)

    def test_one_miss_in_forty(self):
        frames = [frame(f"f{k}") for k in range(39)] + [frame("bad", fn=1)]
        r = summarize(frames, 3.0)
        assert r.sr == pytest.approx(0.975) and r.afn == pytest.approx(0.025) and r.afp == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize([], 3.0)

    def test_table(self):
        header, rows = summarize([frame("a")], 3.0).table()
        assert header[0] == "name" and rows[0][0] == "a"


class TestEvaluate:
    def test_clean_frames(self):
        frames = synth_frames(clean_suite(grids=(20,), seeds=(1, 2)))
        r = evaluate(frames)
        assert r.sr == 1.0 and r.afp == 0 and r.afn == 0
        assert r.tolerance == DEFAULT_TOLERANCE

    def test_workers_agree(self):
        frames = synth_frames(deformed_suite(4, seed=2))
        assert evaluate(frames, workers=3) == evaluate(frames)

    def test_sr_monotone_in_tolerance(self):
        frames = synth_frames(deformed_suite(6, seed=5))
        srs = [evaluate(frames, tol=t).sr for t in (0.05, 0.1, 0.2, 0.5, 3.0)]
        assert srs == sorted(srs)
        assert srs[0] < 1.0

    def test_literal_mode_is_laxer(self):
        frames = synth_frames(deformed_suite(3, seed=5))
        strict = evaluate(frames, tol=0.1)
        literal = evaluate(frames, tol=0.1, failure_mode="literal")
        assert literal.sr >= strict.sr

    def test_argument_errors(self):
        frames = synth_frames(clean_suite(grids=(20,), seeds=(1,)))
        with pytest.raises(ValueError):
            evaluate(frames, failure_mode="lenient")
        with pytest.raises(ValueError):
            evaluate(frames, tol=-1)
        with pytest.raises(ValueError):
            evaluate([])

    def test_suite_shapes(self):
        assert len(clean_suite()) == 15
        suite = deformed_suite()
        assert len(suite) == 60
        assert {c.deform.mode for c in suite} == {"press", "shear", "twist"}
        for c in suite:
            assert c.deform.amplitude <= 0.3 * c.cell_px
            assert c.corrosion_radius <= 2 and c.noise_sigma <= 8
        assert deformed_suite(60, 0) == suite


class TestBench:
    def test_single_repetition(self, grid20):
        r = bench(grid20[0], PipelineConfig(window=41), repetitions=1, warmup=0)
        assert r.frames == 1 and len(r.samples_ms) == 1
        assert r.mean_ms == r.median_ms > 0
        assert r.corners == 361

    def test_threads_recorded(self, grid20):
        r = bench(grid20[0], PipelineConfig(window=41), repetitions=2, threads=2, warmup=1)
        assert r.threads == 2 and r.corners == 361

    def test_argument_errors(self, grid20):
        with pytest.raises(ValueError):
            bench(grid20[0], repetitions=0)
        with pytest.raises(ValueError):
            bench(grid20[0], warmup=-1)
