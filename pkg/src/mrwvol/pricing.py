"""Conditional kurtosis, the implied-volatility smile and call prices.

The log price over [0, t] is treated as conditionally lognormal-mixed
Gaussian: given the observed window ``]-2L, 0[`` the time-average of the
log-volatility over [0, t] has a residual whose variance Q does not depend
on the history.  Q drives the conditional kurtosis ``3 (exp(4 lam2 Q / t^2) - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .forecast import VolHistory, forecast_variance
from .kernels import ForecastConstants, LN2, k_conv_phi
from .quadrature import (
    DEFAULT_MC_SAMPLES,
    Singularity,
    SingularitySpec,
    integrate_1d,
    integrate_2d,
    integrate_4d_mc,
)
from .simulation import LOGVOL_STREAM, NOISE_STREAM, MrwParams, _stream, kernel_covariance

SMALL_LAMBDA2_MAX = 0.05
KURTOSIS_REL_SE_MAX = 0.03
_SQRT_LEFT = SingularitySpec(Singularity.INV_SQRT_LEFT)


@dataclass(frozen=True, eq=False)
class PricingInputs:
    spot_S0: float
    maturity_t: float
    window_L: float
    lambda2: float
    history: VolHistory
    T: float | None = None

    def __post_init__(self):
        if not self.spot_S0 > 0:
            raise ValueError("spot must be positive")
        if not (self.maturity_t > 0 and self.window_L > 0):
            raise ValueError("maturity and window must be positive")
        if not 0 <= self.lambda2 < 0.25:
            raise ValueError("need 0 <= lambda2 < 1/4")
        if self.T is not None and not self.maturity_t < self.T - 2 * self.window_L:
            raise ValueError("need maturity < T - 2L")


@dataclass(frozen=True, eq=False)
class SmileCurve:
    strikes: np.ndarray
    implied_vols: np.ndarray
    sigma_t2: float
    kappa_t: float
    kappa_stderr: float = 0.0


@dataclass(frozen=True)
class KurtosisEstimate:
    value: float
    stderr: float
    log_variance: float
    flagged: bool = False


def _g(t, L):
    # g_map for t >= 0 without the domain check (MC samples may hit t == 0)
    x = np.asarray(t, dtype=float) / L + 1.0
    return 1.0 / (x + np.sqrt(x * x - 1.0))


def _correction(t, L, T):
    if T is None:
        return np.zeros_like(np.asarray(t, dtype=float))
    return (np.asarray(k_conv_phi(np.asarray(t, dtype=float) / (2 * L))) - 1.0) / (
        1.0 + math.log(T / (2 * L)) / (2 * LN2))


def _check(t, L, T):
    if not (t > 0 and L > 0):
        raise ValueError("need t > 0 and L > 0")
    if T is not None and not (2 * L < T and t < T - 2 * L):
        raise ValueError("need 2L < T and t < T - 2L")


def prediction_error_variance(t: float, L: float, T: float | None = None, tol: float = 1e-10):
    """Variance Q of ``int_0^t X - E[int_0^t X | window]``; returns (Q, error bound).

    Every log potential of the kernels has a closed form, which reduces the
    4D integral to
    Q = Ia^2 ln(2T/L) - t^2 (ln t - 3/2) + t^2 ln(L/2) - 2 (t + Ia) G1 + 2 J,
    with G1 = int_0^t ln g, J = int int_{[0,t]^2} ln(1 - g g~) and Ia the
    integral of the finite-T correction coefficient (zero when T is None).
    The error bound is infinite if any quadrature failed to converge.
    """
    _check(t, L, T)
    g1 = integrate_1d(lambda s: math.log(float(_g(s, L))), 0.0, t, _SQRT_LEFT, tol)

    def j_integrand(s, u):
        return math.log1p(-float(_g(s, L)) * float(_g(u, L)))

    j = integrate_2d(j_integrand, [(0.0, t), (0.0, t)], (_SQRT_LEFT, _SQRT_LEFT), tol)
    q = -t * t * (math.log(t) - 1.5) + t * t * math.log(L / 2) - 2 * t * g1.value + 2 * j.value
    err = 2 * t * g1.error_estimate + 2 * j.error_estimate
    if T is not None:
        ia = integrate_1d(lambda s: float(_correction(s, L, T)), 0.0, t, _SQRT_LEFT, tol)
        q += ia.value**2 * math.log(2 * T / L) - 2 * ia.value * g1.value
        err += 2 * abs(ia.value) * (abs(g1.value) + math.log(2 * T / L)) * ia.error_estimate
        if not ia.converged:
            err = math.inf
    if not (g1.converged and j.converged):
        err = math.inf
    return q, err


def prediction_error_variance_mc(t: float, L: float, T: float | None = None,
                                 n_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
                                 workers: int = 1, tol: float = 1e-10):
    """Monte Carlo estimate of Q straight from the covariance expansion.

    With A = int_0^t X and B = int_0^t int K X, Q = E[A^2] - 2 E[AB] + E[B^2].
    The window points are drawn from the arcsine law, under which K_{L,T}
    times the inverse density is the bounded weight ``P(g, theta) + a``.
    The ln T part of the covariance integrates in closed form to
    ``ln(T) Ia^2``.  Returns (Q, standard error).
    """
    _check(t, L, T)
    window = SingularitySpec(Singularity.INV_SQRT_BOTH)

    def weight(s, sigma):
        g = _g(s, L)
        z = sigma / L + 1.0  # cos(theta)
        return (1.0 - g * g) / (1.0 + g * g - 2.0 * g * z) + _correction(s, L, T)

    def f(s, u, sig, sig2):
        ws, wu = weight(s, sig), weight(u, sig2)
        val = (-np.log(np.abs(s - u)) + ws * np.log(np.abs(u - sig)) + wu * np.log(np.abs(s - sig2))
               - ws * wu * np.log(np.abs(sig - sig2)))
        # the sampler multiplies by pi sqrt((sigma+2L)(-sigma)) per window axis
        dens = np.pi * np.sqrt(np.maximum(-sig * (sig + 2 * L), 1e-300)) * np.pi * np.sqrt(
            np.maximum(-sig2 * (sig2 + 2 * L), 1e-300))
        return val / dens

    res = integrate_4d_mc(f, [(0.0, t), (0.0, t), (-2 * L, 0.0), (-2 * L, 0.0)],
                          n_samples, seed, [None, None, window, window], workers)
    q = res.value
    if T is not None:
        ia = integrate_1d(lambda s: float(_correction(s, L, T)), 0.0, t, _SQRT_LEFT, tol).value
        q += math.log(T) * ia**2
    return q, res.error_estimate


def _kurtosis(q, q_err, t, lambda2, flag_rel=KURTOSIS_REL_SE_MAX):
    rate = 4 * lambda2 / (t * t)
    value = 3.0 * math.expm1(rate * q)
    stderr = 3.0 * rate * math.exp(rate * q) * q_err if rate > 0 else 0.0
    flagged = value > 0 and stderr > flag_rel * value
    return KurtosisEstimate(value, stderr, q, flagged)


def kurtosis_limit(t: float, L: float, lambda2: float, n_samples: int = DEFAULT_MC_SAMPLES,
                   seed: int = 0, workers: int = 1) -> KurtosisEstimate:
    """Conditional excess kurtosis of the log return in the T -> inf limit, by 4D MC.

    ``flagged`` is set when the standard error exceeds 3% of the value.
    """
    q, se = prediction_error_variance_mc(t, L, None, n_samples, seed, workers)
    return _kurtosis(q, se, t, lambda2)


def kurtosis_finite_T(t: float, L: float, T: float, lambda2: float, method: str = "quadrature",
                      tol: float = 1e-10, n_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
                      workers: int = 1) -> KurtosisEstimate:
    """Conditional excess kurtosis for a finite correlation length T.

    ``method="quadrature"`` uses the reduced closed form (error from the
    quadrature estimate); ``method="mc"`` uses the 4D Monte Carlo route.
    """
    if method == "quadrature":
        q, err = prediction_error_variance(t, L, T, tol)
    elif method == "mc":
        q, err = prediction_error_variance_mc(t, L, T, n_samples, seed, workers)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _kurtosis(q, err, t, lambda2)


def smile_vols(strikes, spot: float, t: float, sigma_t2: float, kappa: float) -> np.ndarray:
    """Sigma(K, t) = (sigma_t / sqrt t) (1 + kappa ((K - S0)^2 / (S0^2 sigma_t^2) - 1))."""
    if not sigma_t2 > 0:
        raise ValueError("forecast variance must be positive")
    k = np.asarray(strikes, dtype=float)
    if np.any(k <= 0):
        raise ValueError("strikes must be positive")
    m2 = (k - spot) ** 2 / (spot * spot * sigma_t2)
    return math.sqrt(sigma_t2 / t) * (1.0 + kappa * (m2 - 1.0))


def smile_curve(inputs: PricingInputs, strikes, constants: ForecastConstants,
                kurtosis: KurtosisEstimate | None = None, n_samples: int = DEFAULT_MC_SAMPLES,
                seed: int = 0, workers: int = 1) -> SmileCurve:
    """Smile from the forecast variance and the conditional kurtosis.

    The kurtosis is computed (finite-T closed form if ``inputs.T`` is set,
    otherwise the Monte Carlo limit) unless supplied.
    """
    h = inputs.history
    sigma_t2 = forecast_variance(h, inputs.maturity_t, inputs.lambda2, constants, h.tau)
    if kurtosis is None:
        if inputs.T is None:
            kurtosis = kurtosis_limit(inputs.maturity_t, inputs.window_L, inputs.lambda2,
                                      n_samples, seed, workers)
        else:
            kurtosis = kurtosis_finite_T(inputs.maturity_t, inputs.window_L, inputs.T, inputs.lambda2)
    k = np.asarray(strikes, dtype=float)
    vols = smile_vols(k, inputs.spot_S0, inputs.maturity_t, sigma_t2, kurtosis.value)
    return SmileCurve(k, vols, sigma_t2, kurtosis.value, kurtosis.stderr)


def call_price(inputs: PricingInputs, strike: float, smile_vol: float) -> float:
    """Black-Scholes call with zero rate and total standard deviation smile_vol sqrt(t)."""
    if not smile_vol > 0:
        raise ValueError("smile_vol must be positive")
    s0, k = inputs.spot_S0, float(strike)
    sd = smile_vol * math.sqrt(inputs.maturity_t)
    if k <= 0:
        return s0
    d1 = (math.log(s0 / k) + 0.5 * sd * sd) / sd
    return float(s0 * stats.norm.cdf(d1) - k * stats.norm.cdf(d1 - sd))


def average_logvol_variance(params: MrwParams, n_steps: int) -> float:
    """Variance of the mean of X_1..X_n under the discrete covariance."""
    lags = np.arange(n_steps)
    c = kernel_covariance(lags, params)
    mult = np.where(lags == 0, n_steps, 2 * (n_steps - lags))
    return float(mult @ c) / n_steps**2


def approx_mrw_small_lambda(params: MrwParams, t: float, seed: int, size: int = 1,
                            average_variance: float | None = None):
    """Samples of Y_t ~ sigma sqrt(t) exp(lam Xbar - lam2 ln(T e^1.5 / t)) eps.

    Xbar is the mean of the discrete log-volatility over the ``t / tau`` steps
    of [0, t]; it is Gaussian, so it is drawn from its exact law.  Passing
    ``average_variance`` replaces that law by a centred normal with the given
    variance (e.g. the conditional residual variance Q / t^2 given a window).
    """
    if params.lambda2 > SMALL_LAMBDA2_MAX:
        raise ValueError(f"approximation needs lambda2 <= {SMALL_LAMBDA2_MAX}")
    if not t >= params.tau:
        raise ValueError("need t >= tau")
    if average_variance is None:
        average_variance = average_logvol_variance(params, int(round(t / params.tau)))
    xbar = math.sqrt(average_variance) * _stream(seed, LOGVOL_STREAM).standard_normal(size)
    eps = _stream(seed, NOISE_STREAM).standard_normal(size)
    y = params.sigma * math.sqrt(t) * np.exp(
        params.lam * xbar - params.lambda2 * math.log(params.T * math.exp(1.5) / t)) * eps
    return float(y[0]) if size == 1 else y
