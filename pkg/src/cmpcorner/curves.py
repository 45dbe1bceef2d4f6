"""Parameter sweeps of the continuous corner model, as CSV tables.

Amplitude sweeps vary one window parameter at a time; ratio surfaces
cover the azimuth (tau, alpha) and length (T, delta) simplifications;
correlation sweeps shift, stretch or skew the second ring's windows.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .formats import csv_text
from .spectral import (
    CornerSpectrumParams,
    SingularRatio,
    amplitude_ratios_azimuth,
    amplitude_ratios_length,
    continuous_amplitude,
    continuous_xcorr,
    model_signal,
)

__all__ = ["amplitude_sweeps", "ratio_surfaces", "xcorr_sweeps", "all_tables", "write_all"]

PI = math.pi
OMEGAS = np.round(np.arange(1.0, 8.0 + 1e-9, 0.25), 6)
XCORR_SAMPLES = 720  # 0.5 degree lag resolution


def _sweep(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def amplitude_sweeps(n: int = 21) -> dict[str, tuple[list[str], list[tuple]]]:
    q = PI / 4
    tables = {}
    rows = []
    for alpha in _sweep(PI / 2, 3 * PI / 2, n):
        # closed form directly: the params type only admits alpha <= pi
        s = np.sin(OMEGAS * q)
        amp = np.sqrt(np.maximum(2 * s * s * (1 + np.cos(OMEGAS * alpha)), 0.0)) / OMEGAS
        for w, a in zip(OMEGAS, amp):
            rows.append((alpha, w, a))
    tables["fig6_b1"] = (["alpha", "omega", "amplitude"], rows)
    rows = []
    for tau1 in _sweep(PI / 24, 11 * PI / 24, n):
        p = CornerSpectrumParams(tau1, q, PI)
        for w, a in zip(OMEGAS, continuous_amplitude(p, OMEGAS)):
            rows.append((tau1, w, a))
    tables["fig6_b2"] = (["tau1", "omega", "amplitude"], rows)
    rows = []
    for tau in _sweep(PI / 24, 11 * PI / 24, n):
        p = CornerSpectrumParams(tau, tau, PI)
        for w, a in zip(OMEGAS, continuous_amplitude(p, OMEGAS)):
            rows.append((tau, w, a))
    tables["fig6_b3"] = (["tau", "omega", "amplitude"], rows)
    return tables


def _ratio_row(fn, a, b):
    try:
        r12, r23 = fn(a, b)
        return (a, b, r12, r23)
    except SingularRatio:
        return (a, b, "inf", "inf")


def ratio_surfaces(n: int = 25) -> dict[str, tuple[list[str], list[tuple]]]:
    rows = [
        _ratio_row(amplitude_ratios_azimuth, tau, alpha)
        for tau in _sweep(PI / 12, 5 * PI / 12, n)
        for alpha in _sweep(PI / 2, PI, n)
    ]
    surf = {"fig6_c": (["tau", "alpha", "r12", "r23"], rows)}
    rows = []
    for T in _sweep(PI / 4, 3 * PI / 4, n):
        for delta in _sweep(0.0, PI / 2, n):
            tau2 = (T - delta) / 2
            if tau2 <= 0 or (T + delta) / 2 >= PI / 2:
                continue
            rows.append(_ratio_row(amplitude_ratios_length, T, delta))
    surf["fig6_d"] = (["T", "delta", "r12", "r23"], rows)
    return surf


def _xcorr_rows(param: float, p1, p2, d: float):
    theta = np.arange(XCORR_SAMPLES) * (2 * PI / XCORR_SAMPLES)
    r = continuous_xcorr(model_signal(p1, theta), model_signal(p2, theta, d))
    lags = np.arange(XCORR_SAMPLES) * (360.0 / XCORR_SAMPLES)
    lags = np.where(lags > 180.0, lags - 360.0, lags)
    order = np.argsort(lags, kind="stable")
    return [(param, lags[k], r[k]) for k in order]


def xcorr_sweeps(n: int = 9) -> dict[str, tuple[list[str], list[tuple]]]:
    q = PI / 4
    ideal = CornerSpectrumParams(q, q, PI)
    rows = []
    for d in _sweep(0.0, PI / 4, n):
        rows += _xcorr_rows(d, ideal, ideal, d)
    tables = {"fig7_b1": (["d", "lag_deg", "correlation"], rows)}
    rows = []
    for tau22 in _sweep(q, 5 * PI / 12, n):
        rows += _xcorr_rows(tau22, ideal, CornerSpectrumParams(q, tau22, PI), 0.0)
    tables["fig7_b2"] = (["tau22", "lag_deg", "correlation"], rows)
    rows = []
    for alpha2 in _sweep(2 * PI / 3, PI, n):
        rows += _xcorr_rows(alpha2, ideal, CornerSpectrumParams(q, q, alpha2), 0.0)
    tables["fig7_b3"] = (["alpha2", "lag_deg", "correlation"], rows)
    return tables


def all_tables() -> dict[str, tuple[list[str], list[tuple]]]:
    out = {}
    out.update(amplitude_sweeps())
    out.update(ratio_surfaces())
    out.update(xcorr_sweeps())
    return out


def write_all(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (header, rows) in sorted(all_tables().items()):
        path = directory / f"{name}.csv"
        path.write_text(csv_text(header, rows), encoding="utf-8")
        paths.append(path)
    return paths
