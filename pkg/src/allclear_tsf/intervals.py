"""Random intervals and the three interval statistics (mean, std, slope)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError
from .seeding import rng

DEFAULT_MIN_INTERVAL_LENGTH = 3
N_STATS = 3


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open index range ``[start, end)``."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start

    def check(self, n: int, min_len: int = 1) -> None:
        if not (0 <= self.start < self.end <= n):
            raise DataError(f"interval [{self.start}, {self.end}) invalid for series length {n}")
        if self.length < min_len:
            raise DataError(f"interval [{self.start}, {self.end}) shorter than {min_len}")


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[Interval, ...]
    series_length: int

    def __post_init__(self):
        ivs = tuple(iv if isinstance(iv, Interval) else Interval(*map(int, iv)) for iv in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "series_length", int(self.series_length))
        for iv in ivs:
            iv.check(self.series_length)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def starts(self) -> np.ndarray:
        return np.array([iv.start for iv in self.intervals], dtype=np.int64)

    @property
    def ends(self) -> np.ndarray:
        return np.array([iv.end for iv in self.intervals], dtype=np.int64)

    @property
    def n_features(self) -> int:
        return N_STATS * len(self.intervals)


def sample_intervals(n: int, count: int, min_len: int = DEFAULT_MIN_INTERVAL_LENGTH, rng_seed: int = 0) -> IntervalSet:
    """Draw ``count`` intervals: length uniform on [min_len, n], then start uniform on [0, n - length]."""
    if count < 1:
        raise ConfigError(f"interval count must be positive, got {count}")
    if min_len < 1:
        raise ConfigError(f"min_len must be positive, got {min_len}")
    if n < min_len:
        raise DataError(f"series length {n} is shorter than the minimum interval length {min_len}")
    gen = rng(rng_seed)
    lengths = gen.integers(min_len, n + 1, size=count)
    starts = gen.integers(0, n - lengths + 1)
    return IntervalSet(tuple(Interval(int(s), int(s + m)) for s, m in zip(starts, lengths)), n)


def extract_features_batch(X, ivs: IntervalSet) -> np.ndarray:
    """Feature matrix for a 2d array of series, shape (n_series, 3 * len(ivs))."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"expected a 2d array of series, got shape {X.shape}")
    if X.shape[1] != ivs.series_length:
        raise DataError(f"series length {X.shape[1]} does not match interval set length {ivs.series_length}")
    return _kernels.interval_features(X, ivs.starts, ivs.ends)


def extract_features(series, ivs: IntervalSet) -> np.ndarray:
    """``[mean_0, std_0, slope_0, mean_1, ...]`` for one series."""
    return extract_features_batch(np.asarray(series, dtype=np.float64)[None, :], ivs)[0]


def _one(series, iv: Interval) -> np.ndarray:
    series = np.asarray(series, dtype=np.float64)
    iv = iv if isinstance(iv, Interval) else Interval(*iv)
    iv.check(len(series))
    return _kernels.interval_features(series[None, :], np.array([iv.start]), np.array([iv.end]))[0]


def interval_mean(series, iv: Interval) -> float:
    return float(_one(series, iv)[0])


def interval_std(series, iv: Interval) -> float:
    """Sample standard deviation (divisor length - 1); 0 for a single element."""
    return float(_one(series, iv)[1])


def interval_slope(series, iv: Interval) -> float:
    """Least-squares slope of value against position within the interval."""
    return float(_one(series, iv)[2])
