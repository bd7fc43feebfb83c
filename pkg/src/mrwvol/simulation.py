"""Sampling of the discrete log-volatility sequence and MRW price paths.

The log-volatility X_n is a stationary Gaussian sequence with covariance
``ln+(T / ((|n - p| + 1) tau))``.  It is drawn by circulant embedding of the
Toeplitz covariance; the kernel ``ln+(T / (|x| + c))`` has a non-negative
Fourier transform, so the embedding is exact once the circulant is large
enough to hold the whole (finite) support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

# Sub-stream labels; logvol and noise must be independent.
LOGVOL_STREAM = 0
NOISE_STREAM = 1
OMEGA_STREAM = 2

PATHS_PER_CHUNK = 256
_EIG_FLOOR = 1e-10
_MAX_EMBEDDING = 1 << 24
_CHOLESKY_MAX_LEN = 4096


class EmbeddingError(RuntimeError):
    """Covariance could not be factorised by circulant embedding or Cholesky."""


@dataclass(frozen=True)
class MrwParams:
    """Model parameters.

    sigma is the volatility scale per square-root time unit, lambda2 the
    intermittency coefficient, T the correlation length and tau the sampling
    step (same time unit as T).
    """

    sigma: float
    lambda2: float
    T: float
    tau: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.T >= self.tau:
            raise ValueError("T must be at least tau")
        if not 0 <= self.lambda2 < 0.25:
            raise ValueError("need 0 <= lambda2 < 1/4")

    @property
    def lam(self) -> float:
        return math.sqrt(self.lambda2)

    @property
    def gamma(self) -> float:
        return 2.0 * self.lam

    @property
    def logvol_variance(self) -> float:
        return max(0.0, math.log(self.T / self.tau))


@dataclass(frozen=True, eq=False)
class GaussianSequence:
    values: np.ndarray
    params: MrwParams
    seed: int

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class MrwPath:
    returns: np.ndarray
    cumulative: np.ndarray
    params: MrwParams

    def __post_init__(self):
        if len(self.returns) != len(self.cumulative):
            raise ValueError("returns and cumulative must have equal length")

    def __len__(self):
        return len(self.returns)


@dataclass(frozen=True, eq=False)
class RescaledPath:
    path: MrwPath
    omega: float
    T_new: float


@dataclass(frozen=True, eq=False)
class PsdCheck:
    ok: bool
    xi: np.ndarray
    values: np.ndarray
    min_value: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "min_value", float(np.min(self.values)))


def _stream(seed: int, *labels: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=labels))


def kernel_covariance(lag, params: MrwParams):
    """``max(0, ln(T / ((lag + 1) tau)))``; accepts scalars or arrays."""
    lag = np.asarray(lag, dtype=float)
    if np.any(lag < 0):
        raise ValueError("lag must be non-negative")
    out = np.maximum(0.0, np.log(params.T / ((lag + 1.0) * params.tau)))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _factor(T_over_tau: float, length: int, max_embedding: int = _MAX_EMBEDDING):
    """Return ("circulant", sqrt eigenvalues / sqrt(m)) or ("cholesky", L)."""
    m = 2
    while m < 2 * (length - 1):
        m *= 2
    while m <= max_embedding:
        lags = np.arange(m // 2 + 1, dtype=float)
        c = np.maximum(0.0, np.log(T_over_tau / (lags + 1.0)))
        row = np.concatenate([c, c[-2:0:-1]])
        eig = np.fft.fft(row).real
        if eig.min() >= -_EIG_FLOOR * eig.max():
            return "circulant", np.sqrt(np.clip(eig, 0.0, None) / m)
        m *= 2

    if length > _CHOLESKY_MAX_LEN:
        raise EmbeddingError(f"circulant embedding failed up to size {max_embedding}")
    lags = np.abs(np.subtract.outer(np.arange(length), np.arange(length)))
    cov = np.maximum(0.0, np.log(T_over_tau / (lags + 1.0)))
    jitter = 1e-12 * np.trace(cov) / length
    try:
        return "cholesky", np.linalg.cholesky(cov + jitter * np.eye(length))
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError("covariance is not positive definite") from exc


def _draw(kind, factor, length, n, rng):
    if kind == "cholesky":
        return rng.standard_normal((n, length)) @ factor.T
    # (n, 2, m) is filled row by row, so the first k rows never depend on n
    z = rng.standard_normal((n, 2, factor.size))
    return np.fft.fft(factor * (z[:, 0] + 1j * z[:, 1]), axis=1).real[:, :length]


def sample_logvol_batch(params: MrwParams, length: int, n_paths: int, seed: int,
                        max_embedding: int = _MAX_EMBEDDING) -> np.ndarray:
    """Draw ``n_paths`` independent log-volatility sequences, shape (n_paths, length).

    Paths are generated in fixed chunks with their own sub-seeds, so row i
    is the same whatever ``n_paths`` is, provided it is at least i + 1.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    kind, factor = _factor(params.T / params.tau, int(length), max_embedding)
    out = np.empty((n_paths, length))
    for start in range(0, n_paths, PATHS_PER_CHUNK):
        stop = min(start + PATHS_PER_CHUNK, n_paths)
        rng = _stream(seed, LOGVOL_STREAM, start // PATHS_PER_CHUNK)
        out[start:stop] = _draw(kind, factor, length, stop - start, rng)
    return out


def sample_logvol(params: MrwParams, length: int, seed: int) -> GaussianSequence:
    values = sample_logvol_batch(params, length, 1, seed)[0]
    return GaussianSequence(values, params, seed)


def _volatility(x, params: MrwParams):
    return params.sigma * math.sqrt(params.tau) * np.exp(
        params.lam * x - params.lambda2 * params.logvol_variance
    )


def synthesize_returns(logvol: np.ndarray, params: MrwParams, noise_seed: int) -> np.ndarray:
    """Vectorised return synthesis for an array of log-volatility rows."""
    logvol = np.atleast_2d(logvol)
    eps = _stream(noise_seed, NOISE_STREAM).standard_normal(logvol.shape)
    return _volatility(logvol, params) * eps


def synthesize_path(logvol: GaussianSequence, noise_seed: int) -> MrwPath:
    """r_n = sigma sqrt(tau) exp(lam X_n - lam^2 ln+(T/tau)) eps_n."""
    r = synthesize_returns(logvol.values, logvol.params, noise_seed)[0]
    return MrwPath(r, np.cumsum(r), logvol.params)


def simulate_path(params: MrwParams, length: int, seed: int) -> MrwPath:
    return synthesize_path(sample_logvol(params, length, seed), seed)


def simulate_returns(params: MrwParams, length: int, n_paths: int, seed: int) -> np.ndarray:
    x = sample_logvol_batch(params, length, n_paths, seed)
    return synthesize_returns(x, params, seed)


def rescale_factor(params: MrwParams, T_new: float, omega):
    ratio = math.log(T_new / params.T)
    return np.exp(params.lam * np.asarray(omega) - params.lambda2 * ratio)


def rescale_to_T(path: MrwPath, T_new: float, seed: int) -> RescaledPath:
    """Map a correlation-length-T path on [0, T] to one with length ``T_new``.

    The path is multiplied by ``exp(lam Omega - lam^2 ln(T_new / T))`` with
    Omega ~ N(0, ln(T_new / T)) drawn independently of the path.
    """
    p = path.params
    if T_new < p.T:
        raise ValueError("T_new must be >= T")
    if len(path) * p.tau > p.T * (1 + 1e-12):
        raise ValueError("path must lie in the window [0, T]")
    omega = math.sqrt(math.log(T_new / p.T)) * float(_stream(seed, OMEGA_STREAM).standard_normal())
    k = float(rescale_factor(p, T_new, omega))
    new_params = MrwParams(p.sigma, p.lambda2, T_new, p.tau)
    return RescaledPath(MrwPath(path.returns * k, path.cumulative * k, new_params), omega, T_new)


def _ln_plus_transform(xi, T, c):
    """(1/(pi |xi|)) int_0^{2 pi (T-c)|xi|} sin(x) / (x + 2 pi |xi| c) dx."""
    xi = np.abs(np.asarray(xi, dtype=float))
    b = 2 * np.pi * xi * c
    top = 2 * np.pi * xi * (T - c) + b
    si_top, ci_top = special.sici(top)
    if c == 0:
        integral = si_top
    else:
        si_b, ci_b = special.sici(b)
        # shift x -> u - b: sin(u - b) = sin u cos b - cos u sin b
        integral = np.cos(b) * (si_top - si_b) - np.sin(b) * (ci_top - ci_b)
    return integral / (np.pi * xi)


def validate_kernel_psd(params: MrwParams, c: float, grid, tolerance: float = 1e-12) -> PsdCheck:
    """Evaluate the Fourier transform of ``ln+(T / (|x| + c))`` on ``grid``."""
    if not 0 <= c < params.T:
        raise ValueError("need 0 <= c < T")
    xi = np.asarray(grid, dtype=float)
    values = _ln_plus_transform(xi, params.T, c)
    return PsdCheck(bool(np.all(values >= -tolerance)), xi, values)
