"""Logvariogram of daily log-ranges and the least-squares intermittency fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulation import MrwPath

DEFAULT_STEPS_PER_INTERVAL = 16
DEFAULT_LAG_WINDOW = (1, 50)


@dataclass(frozen=True, eq=False)
class RangeSeries:
    values: np.ndarray
    interval: float
    dropped: int = 0

    def __post_init__(self):
        if np.any(self.values <= 0):
            raise ValueError("ranges must be positive")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class VariogramEstimate:
    lags: np.ndarray
    values: np.ndarray
    pair_counts: np.ndarray


@dataclass(frozen=True)
class LambdaFit:
    lambda2_hat: float
    intercept_hat: float
    residual_rms: float
    lag_window: tuple[int, int]


def block_ranges(cumulative: np.ndarray, steps_per_interval: int) -> np.ndarray:
    """Max minus min of the cumulative path over consecutive unit intervals.

    ``cumulative`` may be 2D (one path per row).  The path is taken to start
    at 0, so interval j covers cumulative indices j*s - 1 ... (j+1)*s - 1
    (both ends included, index -1 meaning the starting 0).
    """
    y = np.atleast_2d(np.asarray(cumulative, dtype=float))
    s = int(steps_per_interval)
    n_blocks = y.shape[1] // s
    y = np.concatenate([np.zeros((y.shape[0], 1)), y[:, : n_blocks * s]], axis=1)
    idx = np.arange(n_blocks)[:, None] * s + np.arange(s + 1)
    blocks = y[:, idx]
    return blocks.max(axis=2) - blocks.min(axis=2)


def log_ranges(path: MrwPath, steps_per_interval: int = DEFAULT_STEPS_PER_INTERVAL) -> RangeSeries:
    if steps_per_interval < 2:
        raise ValueError("steps_per_interval must be >= 2")
    if len(path) < steps_per_interval:
        raise ValueError("path shorter than one interval")
    r = block_ranges(path.cumulative, steps_per_interval)[0]
    keep = r > 0
    if not keep.any():
        raise ValueError("all intervals have zero range")
    return RangeSeries(r[keep], steps_per_interval * path.params.tau, int((~keep).sum()))


def variogram_of_logs(log_values: np.ndarray, max_lag: int):
    """Mean squared increments of ``log_values`` (last axis) at lags 1..max_lag."""
    x = np.asarray(log_values, dtype=float)
    lags = np.arange(1, max_lag + 1)
    vals = np.stack([np.mean((x[..., j:] - x[..., :-j]) ** 2, axis=-1) for j in lags], axis=-1)
    return lags, vals, x.shape[-1] - lags


def empirical_variogram(ranges: RangeSeries, max_lag: int) -> VariogramEstimate:
    """V(j) = mean over i of (ln R_{i+j} - ln R_i)^2, all overlapping pairs."""
    if not 1 <= max_lag < len(ranges):
        raise ValueError("need 1 <= max_lag < number of ranges")
    lags, vals, counts = variogram_of_logs(np.log(ranges.values), max_lag)
    return VariogramEstimate(lags, vals, counts)


def fit_loglinear(vario: VariogramEstimate, j_min: int = DEFAULT_LAG_WINDOW[0],
                  j_max: int = DEFAULT_LAG_WINDOW[1]) -> LambdaFit:
    """Ordinary least squares of V(j) on (1, ln j); lambda^2 is half the slope."""
    lags = np.asarray(vario.lags)
    mask = (lags >= j_min) & (lags <= j_max)
    if mask.sum() < 3:
        raise ValueError("fit window must contain at least 3 lags")
    design = np.column_stack([np.ones(mask.sum()), np.log(lags[mask])])
    y = np.asarray(vario.values)[mask]
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return LambdaFit(
        lambda2_hat=float(coef[1] / 2),
        intercept_hat=float(coef[0]),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        lag_window=(int(j_min), int(j_max)),
    )
