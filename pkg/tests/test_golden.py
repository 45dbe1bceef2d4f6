"""Byte-level stability of the PGM, JSON and CSV writers."""

import json
from pathlib import Path

import numpy as np
import pytest

from cmpcorner import DeformSpec, PipelineConfig, SynthConfig, detect, encode_pgm, generate, load_pgm
from cmpcorner.cli import main, truth_document
from cmpcorner.formats import corners_document, csv_text, dumps_json, format_float
from cmpcorner.refiner import Corner

GOLDEN = Path(__file__).parent / "golden"
CONFIG = SynthConfig(
    grid=8, cell_px=12, deform=DeformSpec("twist", 2.5), noise_sigma=5, corrosion_radius=1.5, seed=11
)
PIPELINE = PipelineConfig(window=25, threads=1)


def test_pgm_golden():
    img, _ = generate(CONFIG)
    assert encode_pgm(img) == (GOLDEN / "twist8.pgm").read_bytes()


def test_truth_json_golden():
    _, truth = generate(CONFIG)
    assert dumps_json(truth_document(CONFIG, truth)) == (GOLDEN / "twist8.json").read_text(encoding="utf-8")


def test_corners_json_golden():
    img = load_pgm(GOLDEN / "twist8.pgm")
    doc = corners_document(img.width, img.height, PIPELINE.to_dict(), detect(img, PIPELINE))
    assert dumps_json(doc) == (GOLDEN / "twist8_corners.json").read_text(encoding="utf-8")


def test_cli_reproduces_golden(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["detect", str(GOLDEN / "twist8.pgm"), "--window", "25", "--threads", "1", "--out", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / "twist8_corners.json").read_bytes()


class TestFormats:
    @pytest.mark.parametrize("x,text", [(1.0, "1.000000"), (-0.0000001, "0.000000"), (2 / 3, "0.666667")])
    def test_float(self, x, text):
        assert format_float(x) == text

    def test_non_finite(self):
        with pytest.raises(ValueError):
            format_float(float("nan"))

    def test_sorted_keys_and_types(self):
        text = dumps_json({"b": np.int64(2), "a": [np.float32(0.5), True, None], "c": {}})
        assert text == '{\n  "a": [\n    0.500000,\n    true,\n    null\n  ],\n  "b": 2,\n  "c": {}\n}\n'
        assert json.loads(text) == {"a": [0.5, True, None], "b": 2, "c": {}}

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            dumps_json(object())

    def test_corners_sorted(self):
        cs = [Corner(5.0, 2.0, 1, "midpoint"), Corner(1.0, 2.0, 1, "edgepoint"), Corner(9.0, 1.0, 2, "unrefined")]
        doc = corners_document(10, 10, {}, cs)
        assert [(c["x"], c["y"]) for c in doc["corners"]] == [(9.0, 1.0), (1.0, 2.0), (5.0, 2.0)]

    def test_csv(self):
        assert csv_text(["a", "b"], [(1, 0.5), (True, "x")]) == "a,b\n1,0.500000\n1,x\n"
