"""Stable JSON and CSV output: sorted keys, floats fixed at 6 decimals."""

from __future__ import annotations

import csv
import io
import json
import math
from numbers import Integral, Real

import numpy as np

__all__ = ["dumps_json", "write_json", "format_float", "csv_text", "write_csv", "corners_document"]

FLOAT_DIGITS = 6


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    text = f"{x:.{FLOAT_DIGITS}f}"
    return "0.000000" if text == "-0.000000" else text


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, Integral):
        return str(int(obj))
    if isinstance(obj, Real):
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ("," + pad).join(f"{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in items)
        return "{" + pad + body + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        body = ("," + pad).join(_encode(v, indent, level + 1) for v in seq)
        return "[" + pad + body + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """UTF-8 JSON text with sorted keys and every float at 6 decimals."""
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, Integral):
        return str(int(v))
    if isinstance(v, Real):
        return format_float(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))


def corners_document(width: int, height: int, params: dict, corners) -> dict:
    """The corner JSON schema shared by ``detect`` output and synth sidecars."""
    ordered = sorted(corners, key=lambda c: (c.y, c.x))
    return {
        "width": int(width),
        "height": int(height),
        "params": params,
        "corners": [
            {"x": c.x, "y": c.y, "response": int(c.response), "method": c.method} for c in ordered
        ],
    }
