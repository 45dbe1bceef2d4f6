"""Reference spectral and correlation criteria for ring signals.

These are the slow, exact forms: the continuous two-window corner model,
its closed-form amplitude ratios, the 16-point DFT of a binary ring signal
and the circular cross-correlation between two rings. The fast detector
replaces them with run-length and XOR tests; this module is the ground
truth those tests are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import SIGNAL_LENGTH, as_signal

__all__ = [
    "CornerSpectrumParams",
    "DualRingParams",
    "IntraResponse",
    "InterResponse",
    "SingularRatio",
    "continuous_amplitude",
    "amplitude_ratios_azimuth",
    "amplitude_ratios_length",
    "dft_amplitude",
    "dft_amplitudes",
    "intra_response",
    "circular_xcorr",
    "continuous_xcorr",
    "inter_response",
    "model_signal",
    "sample_model_signal",
    "secondary_peak",
    "DELTA_A_MIN",
    "DELTA_PHI_MAX",
    "AMPLITUDE_EPS",
    "OracleAgreement",
    "exhaustive_agreement",
]

DELTA_A_MIN = 0.75
DELTA_PHI_MAX = 20.0  # degrees
# Amplitude differences that are exactly zero come out of the DFT as
# +-1e-15; the smallest true nonzero difference over all 2^16 signals is
# about 6.6e-3, so any tolerance between those separates them cleanly.
AMPLITUDE_EPS = 1e-9
_STEP_DEG = 360.0 / SIGNAL_LENGTH


class SingularRatio(ZeroDivisionError):
    """Ratio denominator vanishes; callers treat the ratio as > 1."""


@dataclass(frozen=True)
class CornerSpectrumParams:
    """Two black windows of half-widths ``tau1``/``tau2`` whose centers are ``alpha`` apart."""

    tau1: float
    tau2: float
    alpha: float

    def __post_init__(self):
        if not 0 < self.tau1 < math.pi / 2:
            raise ValueError(f"tau1 must lie in (0, pi/2), got {self.tau1}")
        if not 0 < self.tau2 < math.pi / 2:
            raise ValueError(f"tau2 must lie in (0, pi/2), got {self.tau2}")
        if not 0 < self.alpha < math.pi + 1e-12:
            # alpha = pi is the ideal corner and is admitted.
            raise ValueError(f"alpha must lie in (0, pi], got {self.alpha}")

    @classmethod
    def ideal(cls) -> "CornerSpectrumParams":
        return cls(math.pi / 4, math.pi / 4, math.pi)


@dataclass(frozen=True)
class DualRingParams:
    outer: CornerSpectrumParams
    inner: CornerSpectrumParams
    d: float = 0.0

    def __post_init__(self):
        if not -math.pi < self.d <= math.pi:
            raise ValueError(f"d must lie in (-pi, pi], got {self.d}")


@dataclass(frozen=True)
class IntraResponse:
    amp1: float
    amp2: float
    amp3: float
    delta12: float
    delta23: float

    @property
    def accepted(self) -> bool:
        return self.delta12 > AMPLITUDE_EPS and self.delta23 > AMPLITUDE_EPS


@dataclass(frozen=True)
class InterResponse:
    delta_a: float
    delta_phi: float  # degrees

    @property
    def accepted(self) -> bool:
        return self.delta_a > DELTA_A_MIN and self.delta_phi < DELTA_PHI_MAX


# --------------------------------------------------------------------------
# Continuous model


def continuous_amplitude(p: CornerSpectrumParams, omega) -> float | np.ndarray:
    """|F(j omega)| of the two-window signal at integer frequency ``omega``.

    Exact for disjoint windows (tau1 + tau2 <= alpha); overlapping windows
    are counted twice.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 1):
        raise ValueError("omega must be >= 1")
    s1 = np.sin(w * p.tau1)
    s2 = np.sin(w * p.tau2)
    inside = s1 * s1 + s2 * s2 + 2.0 * s1 * s2 * np.cos(w * p.alpha)
    out = np.sqrt(np.maximum(inside, 0.0)) / w
    return float(out) if out.ndim == 0 else out


def amplitude_ratios_azimuth(tau: float, alpha: float) -> tuple[float, float]:
    """(|F1/F2|, |F3/F2|) for equal windows of half-width ``tau``."""
    # |F(w)| = |2 sin(w tau) cos(w alpha / 2)| / w
    f1 = abs(2.0 * math.sin(tau) * math.cos(alpha / 2))
    f2 = abs(math.sin(2 * tau) * math.cos(alpha))
    f3 = abs(2.0 * math.sin(3 * tau) * math.cos(1.5 * alpha)) / 3.0
    if f2 < 1e-15:
        raise SingularRatio(f"|F(2j)| vanishes at tau={tau}, alpha={alpha}")
    return f1 / f2, f3 / f2


def amplitude_ratios_length(T: float, delta: float) -> tuple[float, float]:
    """(|F1/F2|, |F3/F2|) at alpha = pi with T = tau1 + tau2, delta = tau1 - tau2."""
    tau1 = (T + delta) / 2
    tau2 = (T - delta) / 2
    if delta < 0 or not 0 < tau2 <= tau1 < math.pi / 2:
        raise ValueError(f"need 0 < tau2 <= tau1 < pi/2, got T={T}, delta={delta}")
    # odd frequencies subtract, even ones add; sum-to-product identities
    f1 = abs(2.0 * math.cos(T / 2) * math.sin(delta / 2))
    f2 = abs(math.sin(T) * math.cos(delta))
    f3 = abs(2.0 * math.cos(1.5 * T) * math.sin(1.5 * delta)) / 3.0
    if f2 < 1e-15:
        raise SingularRatio(f"|F(2j)| vanishes at T={T}, delta={delta}")
    return f1 / f2, f3 / f2


def model_signal(p: CornerSpectrumParams, theta, d: float = 0.0) -> np.ndarray:
    """Periodic two-window indicator at angles ``theta``; first window centered at ``d``."""
    t = np.mod(np.asarray(theta, dtype=float) - d + math.pi, 2 * math.pi) - math.pi
    first = np.abs(t) <= p.tau1
    t2 = np.mod(t - p.alpha + math.pi, 2 * math.pi) - math.pi
    second = np.abs(t2) <= p.tau2
    return (first | second).astype(float)


def sample_model_signal(p: CornerSpectrumParams, d: float = 0.0) -> np.ndarray:
    """Discretize the model onto 16 ring positions (sample i at bearing i * 22.5 deg)."""
    theta = np.arange(SIGNAL_LENGTH) * (2 * math.pi / SIGNAL_LENGTH)
    return model_signal(p, theta, d).astype(np.uint8)


def secondary_peak(p: CornerSpectrumParams, max_freq: int = 8) -> int:
    """Integer frequency >= 1 of the largest amplitude (the peak beside DC)."""
    freqs = np.arange(1, max_freq + 1)
    return int(freqs[np.argmax(continuous_amplitude(p, freqs))])


def continuous_xcorr(f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Circular cross-correlation of two equally sampled periodic signals,
    R(k) = mean_i s1(i) s2(i + k), with s = 2f - 1."""
    s1 = 2.0 * np.asarray(f1, dtype=float) - 1.0
    s2 = 2.0 * np.asarray(f2, dtype=float) - 1.0
    n = s1.size
    return np.array([np.dot(s1, np.roll(s2, -k)) for k in range(n)]) / n


# --------------------------------------------------------------------------
# Discrete forms

_W16 = np.exp(-1j * np.pi / 8)


def dft_amplitude(g, k: int) -> float:
    """|sum_i g(i) W16^(ik)| by direct summation."""
    bits = as_signal(g)
    total = 0j
    for i in range(SIGNAL_LENGTH):
        if bits[i]:
            total += _W16 ** ((i * k) % SIGNAL_LENGTH)
    return abs(total)


def dft_amplitudes(signals, ks=(1, 2, 3)) -> np.ndarray:
    """Vectorized |DFT| for an (n, 16) array of bit rows; returns (n, len(ks))."""
    g = np.asarray(signals, dtype=float).reshape(-1, SIGNAL_LENGTH)
    i = np.arange(SIGNAL_LENGTH)[:, None]
    basis = _W16 ** ((i * np.asarray(ks)[None, :]) % SIGNAL_LENGTH)
    return np.abs(g @ basis)


def intra_response(g, weighted: bool = False) -> IntraResponse:
    """Amplitude differences at 1/2/3 cycles per revolution.

    With ``weighted`` the differences are scaled by |F(2j)|, which sharpens
    the response against low-amplitude noise.
    """
    a1, a2, a3 = (dft_amplitude(g, k) for k in (1, 2, 3))
    d12, d23 = a2 - a1, a2 - a3
    if weighted:
        d12, d23 = a2 * d12, a2 * d23
    return IntraResponse(a1, a2, a3, d12, d23)


def circular_xcorr(g1, g2) -> np.ndarray:
    """R(k) = (1/16) sum_i s1(i) s2(i + k mod 16), s = 2g - 1."""
    s1 = 2 * as_signal(g1).astype(np.int64) - 1
    s2 = 2 * as_signal(g2).astype(np.int64) - 1
    out = np.empty(SIGNAL_LENGTH)
    for k in range(SIGNAL_LENGTH):
        acc = 0
        for i in range(SIGNAL_LENGTH):
            acc += s1[i] * s2[(i + k) % SIGNAL_LENGTH]
        out[k] = acc / SIGNAL_LENGTH
    return out


def _peak_interval(r: np.ndarray, tol: float = 1e-12) -> tuple[float, float]:
    """Endpoints (in lags) of the longest circular run of ties at the maximum.

    The run is unwrapped so that left <= right; among equally long runs the
    one whose midpoint is nearest zero lag wins. Endpoints are shifted by a
    multiple of n so the midpoint lies in (-n/2, n/2].
    """
    n = r.size
    at_max = np.abs(r - r.max()) <= tol
    if at_max.all():
        return 0.0, 0.0
    start = int(np.flatnonzero(~at_max)[0])
    rotated = np.roll(at_max, -start)
    runs = []
    j = 0
    while j < n:
        if rotated[j]:
            k = j
            while k + 1 < n and rotated[k + 1]:
                k += 1
            runs.append((j + start, k + start))
            j = k + 1
        else:
            j += 1

    def centered(run):
        left, right = run
        mid = (left + right) / 2
        shift = n * math.floor(mid / n + 0.5)
        if mid - shift <= -n / 2:
            shift -= n
        return left - shift, right - shift

    runs = [centered(run) for run in runs]
    runs.sort(key=lambda lr: (-(lr[1] - lr[0]), abs(lr[0] + lr[1])))
    return runs[0]


def inter_response(g1, g2) -> InterResponse:
    """Peak correlation and the phase of the peak interval's midpoint (degrees)."""
    r = circular_xcorr(g1, g2)
    left, right = _peak_interval(r)
    phi = abs((left + right) / 2) * _STEP_DEG
    return InterResponse(float(r.max()), float(phi))


# --------------------------------------------------------------------------
# Exhaustive comparison with the fast intra-layer test


@dataclass(frozen=True)
class OracleAgreement:
    """Fast (N = 4 and delta2 < delta_th) versus spectral acceptance over all 2^16 signals."""

    total: int
    agree: int
    fast_only: int
    oracle_only: int
    fast_accepted: int
    oracle_accepted: int
    family: int  # signals with four runs, each of length 3..5
    family_mismatches: int

    @property
    def rate(self) -> float:
        return self.agree / self.total

    def to_dict(self) -> dict:
        return {**self.__dict__, "rate": self.rate}


def _run_lengths(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transition count and the four run lengths (zeros unless N = 4) per code."""
    bits = ((codes[:, None] >> np.arange(SIGNAL_LENGTH)) & 1).astype(np.int8)
    change = bits != np.roll(bits, -1, axis=1)
    n = change.sum(axis=1)
    runs = np.zeros((codes.size, 4), dtype=np.int64)
    four = np.flatnonzero(n == 4)
    pos = np.nonzero(change[four])[1].reshape(-1, 4)
    runs[four] = np.diff(np.concatenate([pos, pos[:, :1] + SIGNAL_LENGTH], axis=1), axis=1)
    return n, runs


def exhaustive_agreement(delta_th: int = 5) -> OracleAgreement:
    """Compare the fast run-length test with the DFT criterion on every 16-bit signal.

    Bit i of the code is ring sample i; the comparison is invariant to that
    choice because both tests are rotation and reflection invariant.
    """
    codes = np.arange(1 << SIGNAL_LENGTH, dtype=np.int64)
    n, runs = _run_lengths(codes)
    # runs alternate in color, so runs 0/2 share one color and 1/3 the other
    delta2 = np.maximum(np.abs(runs[:, 0] - runs[:, 2]), np.abs(runs[:, 1] - runs[:, 3]))
    fast = (n == 4) & (delta2 < delta_th)
    bits = (codes[:, None] >> np.arange(SIGNAL_LENGTH)) & 1
    a = dft_amplitudes(bits, (1, 2, 3))
    oracle = (a[:, 1] - a[:, 0] > AMPLITUDE_EPS) & (a[:, 1] - a[:, 2] > AMPLITUDE_EPS)
    family = (n == 4) & np.all((runs >= 3) & (runs <= 5), axis=1)
    return OracleAgreement(
        total=int(codes.size),
        agree=int(np.count_nonzero(fast == oracle)),
        fast_only=int(np.count_nonzero(fast & ~oracle)),
        oracle_only=int(np.count_nonzero(oracle & ~fast)),
        fast_accepted=int(np.count_nonzero(fast)),
        oracle_accepted=int(np.count_nonzero(oracle)),
        family=int(np.count_nonzero(family)),
        family_mismatches=int(np.count_nonzero(family & (fast != oracle))),
    )
