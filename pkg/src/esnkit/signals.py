"""Signal-processing primitives: periodograms, smoothing, resampling.

Frequency convention: unit sampling step, frequencies in cycles/step on
[0, 0.5]. Periodograms are one-sided and Parseval-normalized, so the
bin-width-weighted power sums to the signal's population variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantSeriesError,
    DimensionError,
    DivergenceError,
    DomainError,
    ParameterError,
)
from .reservoirs import Reservoir, make_rng

__all__ = [
    "PsdProfile",
    "periodogram",
    "reservoir_response",
    "autocorrelation",
    "gaussian_smooth",
    "normalize_series",
    "resample_to_length",
]


@dataclass
class PsdProfile:
    """One-sided averaged power spectral density on a 0..0.5 grid."""

    freqs: np.ndarray
    power: np.ndarray
    n_averages: int = 1


def _onesided_weights(T: int) -> np.ndarray:
    """Doubling weights for interior bins (DC and Nyquist count once)."""
    k = T // 2 + 1
    w = np.full(k, 2.0)
    w[0] = 1.0
    if T % 2 == 0:
        w[-1] = 1.0
    return w


def _psd_matrix(x: np.ndarray) -> np.ndarray:
    """Columnwise Parseval-normalized periodogram of mean-removed series."""
    T = x.shape[0]
    spec = np.fft.rfft(x - x.mean(axis=0), axis=0)
    power = (spec.real ** 2 + spec.imag ** 2) / T
    return power * _onesided_weights(T)[(...,) + (None,) * (x.ndim - 1)]


def periodogram(x) -> PsdProfile:
    """Magnitude-squared DFT of a mean-removed series, one-sided.

    The bin-width-weighted sum of the returned power equals the series'
    population variance (bin width is ``1/T``).
    """
    series = np.asarray(x, dtype=float)
    if series.ndim != 1:
        raise DimensionError("expected a one-dimensional series")
    if len(series) < 8:
        raise ParameterError("series too short for a periodogram (need >= 8)")
    if not np.isfinite(series).all():
        raise DomainError("series contains non-finite values")
    T = len(series)
    return PsdProfile(freqs=np.fft.rfftfreq(T),
                      power=_psd_matrix(series[:, None])[:, 0],
                      n_averages=1)


def reservoir_response(reservoir: Reservoir, n_trials: int = 10,
                       T: int = 1024, seed: int = 0,
                       match: tuple[float, float] = (0.0, 1.0), *,
                       washout: int = 100) -> PsdProfile:
    """Average white-noise frequency response of a reservoir.

    Drives the reservoir with Gaussian noise whose mean and variance match
    ``match``, discards the washout, and averages the periodograms of every
    neuron over ``n_trials`` independent drives. Output feedback is not
    engaged (there is no readout).
    """
    from .esn import run_teacher_forced

    if n_trials < 1:
        raise ParameterError("n_trials must be >= 1")
    mean, variance = match
    if variance <= 0:
        raise ParameterError("matched variance must be positive")
    std = float(np.sqrt(variance))
    total = None
    for trial in range(n_trials):
        rng = make_rng(seed, trial)
        drive = mean + std * rng.standard_normal(washout + T)
        run = run_teacher_forced(reservoir, drive)
        states = run.states[washout:]
        if not np.isfinite(states).all():
            raise DivergenceError("reservoir response diverged")
        power = _psd_matrix(states).mean(axis=1)
        total = power if total is None else total + power
    return PsdProfile(freqs=np.fft.rfftfreq(T), power=total / n_trials,
                      n_averages=n_trials * reservoir.n)


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelation, normalized so lag 0 equals 1."""
    series = np.asarray(x, dtype=float)
    T = len(series)
    if not 0 <= max_lag < T / 2:
        raise ParameterError("max_lag must satisfy 0 <= max_lag < T/2")
    d = series - series.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0:
        raise ConstantSeriesError("autocorrelation of a constant series is undefined")
    return np.array([np.dot(d[:T - k], d[k:]) / denom for k in range(max_lag + 1)])


def gaussian_smooth(x, window_len: int = 3, sigma: float = 1.0) -> np.ndarray:
    """Convolve with a normalized sampled Gaussian, reflective boundary."""
    if window_len < 1 or window_len % 2 == 0:
        raise ParameterError("window_len must be odd")
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    series = np.asarray(x, dtype=float)
    if series.ndim != 1 or len(series) < 2:
        raise DimensionError("expected a 1-D series with at least 2 samples")
    half = window_len // 2
    taps = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma) ** 2)
    taps /= taps.sum()
    padded = np.pad(series, half, mode="reflect")
    return np.convolve(padded, taps, mode="valid")


def normalize_series(x) -> np.ndarray:
    """Shift and scale to exact zero mean and unit population variance."""
    series = np.asarray(x, dtype=float)
    std = float(series.std())
    if std == 0.0:
        raise ConstantSeriesError("cannot normalize a constant series")
    return (series - series.mean()) / std


def resample_to_length(x, length: int = 40) -> np.ndarray:
    """Linear interpolation onto ``length`` points spanning the series."""
    series = np.asarray(x, dtype=float)
    if len(series) < 2:
        raise ParameterError("need at least 2 samples to resample")
    if length < 2:
        raise ParameterError("target length must be >= 2")
    grid = np.linspace(0.0, len(series) - 1.0, length)
    return np.interp(grid, np.arange(len(series)), series)
