import csv
import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from cmpcorner import GrayImage, load_pgm, save_pgm
from cmpcorner.cli import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def grid_pgm(tmp_path, capsys):
    path = tmp_path / "grid.pgm"
    code, _, _ = run(["synth", "--grid", 20, "--cell-px", 16, "--seed", 1, "--out", path], capsys)
    assert code == EXIT_OK
    return path


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestDetect:
    def test_grid_count(self, grid_pgm, capsys):
        code, out, _ = run(["detect", grid_pgm, "--threads", 1], capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        assert set(doc) == {"width", "height", "params", "corners"}
        assert len(doc["corners"]) == 361
        keys = [(c["y"], c["x"]) for c in doc["corners"]]
        assert keys == sorted(keys)
        assert set(doc["corners"][0]) == {"x", "y", "response", "method"}

    def test_matches_truth(self, grid_pgm, capsys):
        _, out, _ = run(["detect", grid_pgm], capsys)
        found = np.array([[c["x"], c["y"]] for c in json.loads(out)["corners"]])
        truth = json.loads(grid_pgm.with_suffix(".json").read_text())
        expected = np.array([[c["x"], c["y"]] for c in truth["corners"]])
        order = np.lexsort((expected[:, 0], expected[:, 1]))
        assert np.allclose(found, expected[order], atol=1e-6)

    def test_all_white(self, tmp_path, capsys):
        path = tmp_path / "white.pgm"
        save_pgm(GrayImage(np.full((40, 40), 255, np.uint8)), path)
        code, out, _ = run(["detect", path], capsys)
        assert code == EXIT_OK and json.loads(out)["corners"] == []

    def test_byte_identical(self, grid_pgm, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["detect", grid_pgm, "--out", a, "--threads", 1], capsys)
        run(["detect", grid_pgm, "--out", b, "--threads", 3], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_float_format(self, grid_pgm, capsys):
        _, out, _ = run(["detect", grid_pgm], capsys)
        assert '"x": 23.500000' in out

    def test_annotate(self, grid_pgm, tmp_path, capsys):
        ann = tmp_path / "ann.pgm"
        code, _, _ = run(["detect", grid_pgm, "--annotate", ann], capsys)
        assert code == EXIT_OK
        src, marked = load_pgm(grid_pgm).pixels, load_pgm(ann).pixels
        assert marked.shape == src.shape and (marked != src).sum() > 361

    @pytest.mark.parametrize(
        "extra",
        [["--window", 30], ["--window", 1001], ["--delta-th", 0], ["--offset", 100], ["--nms-radius", 0]],
    )
    def test_bad_flags(self, grid_pgm, capsys, extra):
        code, _, err = run(["detect", grid_pgm, *extra], capsys)
        assert code == EXIT_USAGE and err.startswith("cmpcorner detect:")

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(["detect", tmp_path / "nope.pgm"], capsys)
        assert code == EXIT_USAGE and "nope.pgm" in err

    def test_malformed_pgm(self, tmp_path, capsys):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5 10 10 255\n" + bytes(5))
        code, _, _ = run(["detect", path], capsys)
        assert code == EXIT_USAGE

    def test_too_small(self, tmp_path, capsys):
        path = tmp_path / "tiny.pgm"
        save_pgm(GrayImage(np.zeros((8, 8), np.uint8)), path)
        assert run(["detect", path], capsys)[0] == EXIT_USAGE

    def test_unknown_flag(self, grid_pgm):
        with pytest.raises(SystemExit) as exc:
            main(["detect", str(grid_pgm), "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_internal_error(self, grid_pgm, capsys, monkeypatch):
        import cmpcorner.cli as cli

        def boom(*a, **k):
            raise AssertionError("broken invariant")

        monkeypatch.setattr(cli, "detect", boom)
        code, _, err = run(["detect", grid_pgm], capsys)
        assert code == EXIT_INTERNAL and "internal error" in err


class TestSynth:
    def test_summary_and_sidecar(self, tmp_path, capsys):
        out = tmp_path / "s.pgm"
        code, stdout, _ = run(["synth", "--grid", 20, "--cell-px", 16, "--deform", "none", "--seed", 7, "--out", out], capsys)
        assert code == EXIT_OK and "361 ground-truth corners" in stdout
        doc = json.loads(out.with_suffix(".json").read_text())
        assert len(doc["corners"]) == 361
        assert {"i", "j", "x", "y"} <= set(doc["corners"][0])

    def test_identical_hashes(self, tmp_path, capsys):
        flags = ["--grid", 12, "--cell-px", 12, "--deform", "twist", "--amplitude", 2, "--noise", 4, "--seed", 9]
        run(["synth", *flags, "--out", tmp_path / "a.pgm"], capsys)
        run(["synth", *flags, "--out", tmp_path / "b.pgm"], capsys)
        assert digest(tmp_path / "a.pgm") == digest(tmp_path / "b.pgm")
        assert digest(tmp_path / "a.json") == digest(tmp_path / "b.json")

    def test_press_displacement(self, tmp_path, capsys):
        run(["synth", "--deform", "press", "--amplitude", 6, "--out", tmp_path / "p.pgm"], capsys)
        run(["synth", "--out", tmp_path / "n.pgm"], capsys)
        p = json.loads((tmp_path / "p.json").read_text())["corners"]
        n = json.loads((tmp_path / "n.json").read_text())["corners"]
        disp = [math.hypot(a["x"] - b["x"], a["y"] - b["y"]) for a, b in zip(p, n)]
        assert max(disp) <= 6.0 + 1e-6

    @pytest.mark.parametrize(
        "extra", [["--amplitude", 9, "--deform", "press"], ["--cell-px", 4], ["--grid", 1], ["--width", 50]]
    )
    def test_invalid_config(self, tmp_path, capsys, extra):
        code, _, _ = run(["synth", *extra, "--out", tmp_path / "x.pgm"], capsys)
        assert code == EXIT_USAGE


class TestEval:
    def test_synthetic_frames(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        table = tmp_path / "r.csv"
        code, _, _ = run(["eval", "--synth-frames", 10, "--grid", 10, "--cell-px", 16, "--out", out, "--csv", table], capsys)
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["sr"] == 1.0 and doc["afp"] == 0 and doc["afn"] == 0 and doc["frame_count"] == 10
        rows = list(csv.reader(table.open()))
        assert rows[0][0] == "name" and len(rows) == 11

    def test_tiny_tolerance(self, capsys):
        code, out, _ = run(
            ["eval", "--synth-frames", 3, "--grid", 10, "--cell-px", 16, "--noise", 6, "--deform", "twist",
             "--amplitude", 3, "--tolerance", 0.0001],
            capsys,
        )
        assert code == EXIT_OK and json.loads(out)["sr"] < 1.0

    def test_directory_with_missing_sidecar(self, tmp_path, capsys):
        run(["synth", "--grid", 10, "--out", tmp_path / "a.pgm"], capsys)
        run(["synth", "--grid", 10, "--seed", 2, "--out", tmp_path / "b.pgm"], capsys)
        (tmp_path / "b.json").unlink()
        code, out, _ = run(["eval", tmp_path], capsys)
        doc = json.loads(out)
        assert code == EXIT_OK and doc["frame_count"] == 1 and doc["sr"] == 1.0
        assert doc["errors"][0]["name"] == "b"

    def test_directory_all_missing(self, tmp_path, capsys):
        run(["synth", "--grid", 10, "--out", tmp_path / "a.pgm"], capsys)
        (tmp_path / "a.json").unlink()
        code, _, err = run(["eval", tmp_path], capsys)
        assert code == EXIT_USAGE and "missing ground-truth sidecar" in err

    def test_recipe(self, tmp_path, capsys):
        recipe = tmp_path / "recipe.json"
        recipe.write_text(json.dumps({"suite": "clean", "grids": [20], "seeds": [1, 2]}))
        code, out, _ = run(["eval", "--recipe", recipe], capsys)
        assert code == EXIT_OK and json.loads(out)["frame_count"] == 2

    def test_no_source(self, capsys):
        assert run(["eval"], capsys)[0] == EXIT_USAGE

    def test_bad_tolerance(self, capsys):
        assert run(["eval", "--synth-frames", 1, "--tolerance", 0], capsys)[0] == EXIT_USAGE


class TestBench:
    def test_single_repetition(self, grid_pgm, capsys):
        code, out, _ = run(["bench", grid_pgm, "--repetitions", 1, "--warmup", 0, "--threads", 1], capsys)
        doc = json.loads(out)
        assert code == EXIT_OK and len(doc["samples_ms"]) == 1
        assert doc["mean_ms"] == doc["median_ms"] and doc["corners"] == 361

    def test_default_frame(self, capsys):
        code, out, _ = run(["bench", "--repetitions", 1, "--warmup", 0], capsys)
        doc = json.loads(out)
        assert code == EXIT_OK and (doc["width"], doc["height"]) == (640, 480)
        assert doc["corners"] >= 1900


class TestCurves:
    def read(self, path):
        with path.open() as f:
            return list(csv.DictReader(f))

    def test_files_and_values(self, tmp_path, capsys):
        code, out, _ = run(["curves", "--out", tmp_path], capsys)
        assert code == EXIT_OK
        names = sorted(p.name for p in tmp_path.glob("*.csv"))
        assert names == [f"fig6_{s}.csv" for s in ("b1", "b2", "b3", "c", "d")] + [
            f"fig7_{s}.csv" for s in ("b1", "b2", "b3")
        ]
        b1 = self.read(tmp_path / "fig6_b1.csv")
        row = next(r for r in b1 if abs(float(r["alpha"]) - math.pi) < 1e-6 and float(r["omega"]) == 2.0)
        assert float(row["amplitude"]) == pytest.approx(1.0, abs=1e-6)
        xc = [r for r in self.read(tmp_path / "fig7_b1.csv") if float(r["d"]) == 0.0]
        peak = max(xc, key=lambda r: float(r["correlation"]))
        assert float(peak["lag_deg"]) == 0.0 and float(peak["correlation"]) == pytest.approx(1.0)
        c = self.read(tmp_path / "fig6_c.csv")
        cell = next(
            r for r in c if abs(float(r["tau"]) - math.pi / 4) < 1e-6 and abs(float(r["alpha"]) - math.pi) < 1e-6
        )
        assert float(cell["r12"]) == pytest.approx(0.0, abs=1e-6)

    def test_deterministic(self, tmp_path, capsys):
        run(["curves", "--out", tmp_path / "a"], capsys)
        run(["curves", "--out", tmp_path / "b"], capsys)
        for p in (tmp_path / "a").iterdir():
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_module_entry_point(grid_pgm):
    proc = subprocess.run(
        [sys.executable, "-m", "cmpcorner", "detect", str(grid_pgm), "--threads", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and len(json.loads(proc.stdout)["corners"]) == 361
