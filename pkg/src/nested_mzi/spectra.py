"""Power spectra, single-bin DFT coefficients, peak detection, log-log slope fits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSweep, FreqOutOfRange
from .field import TimeSeries

PEAK_FACTOR = 1e6
# Smallest per-bin quad power the detector registers (unit input power).
# Sits about 40 dB under a first-order peak at g0 = 1e-3 and far above
# third-order intermodulation products.
SENSITIVITY = 1e-12
UNDERFLOW = 1e-15


@dataclass(frozen=True)
class Peak:
    freq: int
    magnitude: float  # tone amplitude in q
    power: float
    above_threshold: bool


@dataclass(frozen=True)
class Slope:
    param: str
    exponent: float
    residual: float
    points: tuple[tuple[float, float], ...] = ()


@dataclass
class SpectrumReport:
    freqs: np.ndarray
    q_power: np.ndarray
    p_power: np.ndarray
    threshold: float
    peaks: list[Peak] = field(default_factory=list)
    slopes: list[Slope] = field(default_factory=list)

    def bin(self, freq: int) -> float:
        return float(self.q_power[freq])

    def peak(self, freq: int) -> Peak:
        for p in self.peaks:
            if p.freq == freq:
                return p
        return make_peak(self, freq)


def _one_sided_power(x: np.ndarray) -> np.ndarray:
    n = len(x)
    X = np.fft.rfft(x)
    power = np.abs(X) ** 2 / n**2
    power[1:-1] *= 2.0
    return power


def peak_threshold(q_power: np.ndarray, factor: float = PEAK_FACTOR, floor: float = SENSITIVITY) -> float:
    """A bin is a peak iff its power exceeds ``max(median * factor, floor)``."""
    return max(float(np.median(q_power[1:])) * factor, floor)


def make_peak(report: SpectrumReport, freq: int) -> Peak:
    power = float(report.q_power[freq])
    return Peak(int(freq), float(np.sqrt(2.0 * power)), power, power > report.threshold)


def power_spectrum(
    ts: TimeSeries,
    peak_freqs=(),
    factor: float = PEAK_FACTOR,
    floor: float = SENSITIVITY,
) -> SpectrumReport:
    """One-sided rectangular-window spectrum of ``q`` and ``p``.

    Bin powers sum to the mean square of the signal (Parseval). Peaks are
    evaluated at ``peak_freqs``.
    """
    n = ts.n_samples
    if n < 2 or n & (n - 1):
        raise ValueError(f"n_samples must be a power of two, got {n}")
    q_power = _one_sided_power(np.asarray(ts.q, dtype=float))
    p_power = _one_sided_power(np.asarray(ts.p, dtype=float))
    report = SpectrumReport(
        freqs=np.arange(n // 2 + 1),
        q_power=q_power,
        p_power=p_power,
        threshold=peak_threshold(q_power, factor, floor),
    )
    report.peaks = [make_peak(report, f) for f in sorted(set(int(f) for f in peak_freqs))]
    return report


def single_bin(ts_or_signal, freq: int, channel: str = "q") -> float:
    """|X_freq| of the unnormalised DFT ``sum_n x_n exp(-2 pi i freq n / N)``.

    A tone of amplitude ``a`` at an integer bin gives ``a * N / 2``. Twiddle
    phases are reduced modulo N before evaluation, so the coefficient is
    accurate for long records.
    """
    x = getattr(ts_or_signal, channel) if isinstance(ts_or_signal, TimeSeries) else ts_or_signal
    x = np.asarray(x, dtype=float)
    n = len(x)
    if isinstance(freq, bool) or int(freq) != freq or not 1 <= freq < n // 2:
        raise FreqOutOfRange(f"freq {freq} outside [1, {n // 2})")
    idx = (int(freq) * np.arange(n, dtype=np.int64)) % n
    twiddle = np.exp(-2j * np.pi * idx / n)
    return float(abs(x @ twiddle))


def bin_power_from_single(value: float, n: int) -> float:
    """Convert a :func:`single_bin` magnitude to the one-sided bin power."""
    return 2.0 * (value / n) ** 2


def fit_slope(points) -> tuple[float, float]:
    """Least-squares exponent of ``y = c * x**k`` in log-log coordinates.

    Returns ``(k, max relative residual)``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
        raise DegenerateSweep(f"need at least 4 (x, y) points, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0):
        raise DegenerateSweep("x values must be positive")
    if np.any(~np.isfinite(y)) or np.any(y < UNDERFLOW):
        raise DegenerateSweep(
            f"y values below {UNDERFLOW:g} (min {np.nanmin(y):.3g}): signal lost in round-off"
        )
    if x.max() / x.min() < 10.0 * (1 - 1e-12):
        raise DegenerateSweep(f"x span {x.max() / x.min():.3g} is less than one decade")
    lx, ly = np.log(x), np.log(y)
    k, c = np.polyfit(lx, ly, 1)
    fitted = np.exp(c + k * lx)
    return float(k), float(np.max(np.abs(y - fitted) / fitted))
