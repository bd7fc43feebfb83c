"""Volatility forecasting from an observed volatility history.

The forecast only needs lambda^2: the discretised infinite-past kernel gives
weights that do not depend on the step, and the scale sigma and the
correlation length T drop out of the final formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .kernels import ForecastConstants, residual_variance
from .simulation import MrwParams, kernel_covariance


@dataclass(frozen=True, eq=False)
class ForecastWeights:
    horizon_n: int
    weights: np.ndarray
    history_len_N: int
    residual_variance: float | None = None

    @property
    def total(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True, eq=False)
class VolHistory:
    """Observed per-step volatilities, most recent first (k = 0, 1, ..., N)."""

    sigmas: np.ndarray
    tau: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("history must be a non-empty 1D sequence")
        if np.any(s <= 0):
            raise ValueError("history volatilities must be positive")
        object.__setattr__(self, "sigmas", s)

    @property
    def N(self) -> int:
        return self.sigmas.size - 1


@dataclass(frozen=True)
class VolForecast:
    horizon_n: int
    value: float
    lambda2: float


def alpha_star(n, k):
    """(2/pi)(arctan sqrt(k/n) - arctan sqrt((k-1)/n)); vectorised over k."""
    k = np.asarray(k, dtype=float)
    if n < 1 or np.any(k < 1):
        raise ValueError("need n >= 1 and k >= 1")
    # arctan a - arctan b = arctan((a-b)/(1+ab)) avoids cancellation for large k
    a, b = np.sqrt(k / n), np.sqrt((k - 1) / n)
    out = 2 / np.pi * np.arctan((a - b) / (1 + a * b))
    return float(out) if out.ndim == 0 else out


def weight_row(n: int, N: int) -> ForecastWeights:
    if N < 0:
        raise ValueError("N must be >= 0")
    return ForecastWeights(n, alpha_star(n, np.arange(1, N + 2)), N)


def weight_sum(n: int, N: int) -> float:
    """Telescoped row sum, (2/pi) arctan sqrt((N+1)/n)."""
    return 2 / math.pi * math.atan(math.sqrt((N + 1) / n))


def exact_conditional_law(n: int, N: int, params: MrwParams) -> ForecastWeights:
    """Best linear predictor of X_n from X_0, X_-1, ..., X_-N and its error variance.

    Solves the Toeplitz normal equations E[X_j Z_n] = 0 by Levinson recursion.
    """
    if n < 1 or N < 0:
        raise ValueError("need n >= 1 and N >= 0")
    c = kernel_covariance(np.arange(N + 1), params)
    rhs = kernel_covariance(n + np.arange(N + 1), params)
    if c[0] <= 0:
        raise np.linalg.LinAlgError("degenerate covariance (T <= tau)")
    try:
        w = linalg.solve_toeplitz(c, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular covariance system") from exc
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("singular covariance system")
    return ForecastWeights(n, w, N, float(c[0] - w @ rhs))


def exact_weights_oracle(n: int, N: int, params: MrwParams) -> np.ndarray:
    return exact_conditional_law(n, N, params).weights


def _log_geometric_mean(history: VolHistory, n: int) -> float:
    w = alpha_star(n, np.arange(1, history.sigmas.size + 1))
    return float(w @ np.log(history.sigmas))


def forecast_vol(history: VolHistory, n: int, lambda2: float,
                 constants: ForecastConstants) -> VolForecast:
    """E[sigma_n | past] ~ exp(lam2 C / 2) n^(lam2/2) prod sigma_{-k}^alpha*_{n,k+1}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    log_val = lambda2 / 2 * residual_variance(n, constants) + _log_geometric_mean(history, n)
    return VolForecast(n, math.exp(log_val), lambda2)


def forecast_sensitivity(forecast: VolForecast, constants: ForecastConstants) -> float:
    """Derivative of the forecast with respect to lambda^2."""
    return 0.5 * residual_variance(forecast.horizon_n, constants) * forecast.value


def forecast_variance_terms(history: VolHistory, t: float, lambda2: float,
                            constants: ForecastConstants, tau: float | None = None) -> np.ndarray:
    """Per-step conditional variances E[r_n^2 | past] for n = 1..floor(t/tau)."""
    tau = history.tau if tau is None else tau
    if not t >= tau:
        raise ValueError("need t >= tau")
    n_steps = int(math.floor(t / tau + 1e-9))
    return np.array([
        math.exp(2 * lambda2 * residual_variance(n, constants) + 2 * _log_geometric_mean(history, n))
        for n in range(1, n_steps + 1)
    ])


def forecast_variance(history: VolHistory, t: float, lambda2: float,
                      constants: ForecastConstants, tau: float | None = None) -> float:
    """Forecast variance of the log return over [0, t].

    sigma_t^2 = sum_n exp(2 lam2 (ln n + C)) prod_k sigma_{-k}^(2 alpha*_{n,k+1}),
    the conditional lognormal second moment of each step with the same
    weights and residual variance as ``forecast_vol``.
    """
    return float(forecast_variance_terms(history, t, lambda2, constants, tau).sum())


def conditional_variance_exact(logvol_history: np.ndarray, n_steps: int, params: MrwParams) -> float:
    """Sum over n <= n_steps of E[r_n^2 | X_0..X_-N] in the discrete model.

    ``logvol_history`` holds X_{-k}, most recent first.  Uses the exact
    Gaussian conditional law, not the forecast approximation.
    """
    x = np.asarray(logvol_history, dtype=float)
    N = x.size - 1
    scale = params.sigma**2 * params.tau * math.exp(-2 * params.lambda2 * params.logvol_variance)
    lam = params.lam
    total = 0.0
    for n in range(1, n_steps + 1):
        law = exact_conditional_law(n, N, params)
        total += scale * math.exp(2 * lam * (law.weights @ x) + 2 * params.lambda2 * law.residual_variance)
    return total


def conditional_variance_mc(logvol_history: np.ndarray, n_steps: int, params: MrwParams,
                            n_samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo version of ``conditional_variance_exact``.

    Simulates the future log-volatility X_1..X_m jointly given the history
    (Gaussian conditioning on the full Toeplitz covariance) and averages the
    realised sum of squared step volatilities.  Returns (mean, standard error).
    """
    x = np.asarray(logvol_history, dtype=float)
    N = x.size - 1
    m = n_steps
    # order: future X_m..X_1, then history X_0..X_-N (decreasing time)
    cov = linalg.toeplitz(kernel_covariance(np.arange(m + N + 1), params))
    s_ff, s_fh, s_hh = cov[:m, :m], cov[:m, m:], cov[m:, m:]
    chol = linalg.cho_factor(s_hh)
    mean = s_fh @ linalg.cho_solve(chol, x)
    cond = s_ff - s_fh @ linalg.cho_solve(chol, s_fh.T)
    root = np.linalg.cholesky(cond + 1e-12 * np.trace(cond) / m * np.eye(m))
    rng = np.random.default_rng(seed)
    future = mean + rng.standard_normal((n_samples, m)) @ root.T
    scale = params.sigma**2 * params.tau * math.exp(-2 * params.lambda2 * params.logvol_variance)
    realised = scale * np.exp(2 * params.lam * future).sum(axis=1)
    return float(realised.mean()), float(realised.std(ddof=1) / math.sqrt(n_samples))
