"""Fourier amplitudes (Liouville torus radii) of evenly sampled series.

A series of length n is read as f(2*pi*i/n), i = 0..n-1, and its Fourier
coefficient uses the 1/n convention

    f_hat(L) = (1/n) * sum_i samples[i] * exp(-2*pi*sqrt(-1)*L*i/n),

so cos(L t) has f_hat(L) = 1/2 and radius r_L = 2*|f_hat(L)| = 1. Phases are
dropped. Odd n is fine. For even n the Nyquist mode n/2 is allowed, but there
the two conjugate bins coincide: a pure cos((n/2) t) gives r = 2, not 1.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.fft import rfft

from fl_emph.errors import DomainError, InputError


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise InputError(f"a time series must be one-dimensional, got shape {samples.shape}")
        if samples.size < 2:
            raise InputError(f"a time series needs at least 2 samples, got {samples.size}")
        if not np.all(np.isfinite(samples)):
            raise InputError("time series samples must all be finite")
        if self.label is not None and int(self.label) < 0:
            raise InputError(f"labels must be nonnegative, got {self.label}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class LiouvilleRadii:
    modes: np.ndarray
    radii: np.ndarray

    @property
    def N(self) -> int:
        return int(self.modes.size)


def check_modes(modes: Sequence[int], length: int) -> np.ndarray:
    """validate Fourier mode indices against a series length

    Args:
        modes (Sequence[int]): requested mode indices
        length (int): series length n

    Raises:
        InputError: empty or non-increasing modes, or n < 2
        DomainError: a mode outside 1..floor(n/2)

    Returns:
        np.ndarray: modes as an int array
    """
    if length < 2:
        raise InputError(f"series length must be at least 2, got {length}")
    modes_arr = np.asarray(modes)
    if modes_arr.ndim != 1 or modes_arr.size == 0:
        raise InputError("at least one Fourier mode is required")
    if not np.all(modes_arr == np.round(modes_arr)):
        raise InputError(f"Fourier modes must be integers, got {list(modes)}")
    modes_arr = modes_arr.astype(int)
    for mode in modes_arr:
        if mode < 1 or mode > length // 2:
            raise DomainError(
                f"Fourier mode {mode} is out of range 1..{length // 2} for series of length {length}"
            )
    if np.any(np.diff(modes_arr) <= 0):
        raise InputError(f"Fourier modes must be strictly increasing, got {modes_arr.tolist()}")
    return modes_arr


def fourier_amplitudes(series: TimeSeries, modes: Sequence[int]) -> LiouvilleRadii:
    """Radii r_L = 2*|f_hat(L)| for the requested modes."""
    if not isinstance(series, TimeSeries):
        series = TimeSeries(np.asarray(series, dtype=float))
    modes_arr = check_modes(modes, len(series))
    coefficients = rfft(series.samples) / len(series)
    radii = 2.0 * np.abs(coefficients[modes_arr])
    return LiouvilleRadii(modes=modes_arr, radii=radii)


def batch_fourier_amplitudes(samples: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Radii for every row of an (m, n) sample matrix, shape (m, N)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise InputError(f"expected an (m, n) sample matrix, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise InputError("time series samples must all be finite")
    modes_arr = check_modes(modes, samples.shape[1])
    coefficients = rfft(samples, axis=-1) / samples.shape[1]
    return 2.0 * np.abs(coefficients[:, modes_arr])
