"""Prediction kernels for the log-correlated field and the forecast constant.

Conventions: the observation window is ``]-2L, 0[``, ``t`` is the time at
which the field is predicted and ``s`` runs over the window.  On the window
we often use the angle ``theta`` defined by ``s = L (cos(theta) - 1)``; in
that variable ``K_L(t, s) ds`` is the Poisson kernel of the unit disc,
``(1/pi) (1 - g^2) / (1 - 2 g cos(theta) + g^2) dtheta``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import (
    DEFAULT_TOL_2D,
    Singularity,
    SingularitySpec,
    integrate_1d,
    integrate_2d,
    integrate_4d_mc,
)

LN2 = math.log(2.0)
# the forecast constant has the closed form 2 ln 2 (see tests/test_kernels.py)
PRED_CONSTANT_EXACT = 2.0 * LN2
_ENDPOINT_GUARD = 1e-12


class KernelDomainError(ValueError):
    """Kernel evaluated outside its domain."""


class NumericalGateError(RuntimeError):
    """A computed constant failed its sanity check."""


@dataclass(frozen=True)
class WindowGeometry:
    L: float
    T: float | None = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.T is not None and not 2 * self.L < self.T:
            raise ValueError("need 2L < T")


@dataclass(frozen=True)
class ForecastConstants:
    c_pred: float
    computed_tol: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.c_pred):
            raise ValueError("c_pred must be finite")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def g_map(t, L: float):
    """Image of the prediction time on the diameter of the unit disc."""
    t = np.asarray(t, dtype=float)
    if np.any((t >= -2 * L) & (t <= 0)):
        raise KernelDomainError("g_map needs t > 0 or t < -2L")
    x = t / L + 1.0
    # x -/+ sqrt(x^2-1) written as a reciprocal to avoid cancellation
    return _out(np.sign(x) / (np.abs(x) + np.sqrt(x * x - 1.0)))


def kernel_K(t, s):
    """Infinite-past kernel ``(1/pi) sqrt(t) / ((t - s) sqrt(-s))``."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s >= 0):
        raise KernelDomainError("kernel_K needs t > 0 and s < 0")
    return _out(np.sqrt(t) / ((t - s) * np.sqrt(-s)) / np.pi)


def _check_window(s, L):
    s = np.asarray(s, dtype=float)
    guard = _ENDPOINT_GUARD * L
    if np.any(s <= -2 * L + guard) or np.any(s >= -guard):
        raise KernelDomainError("s must lie inside ]-2L, 0[ away from the endpoints")
    return s


def poisson_weight(g, theta):
    """``(1/pi) (1 - g^2) / (1 - 2 g cos(theta) + g^2)``: K_L in angle form."""
    g = np.asarray(g, dtype=float)
    return (1.0 - g * g) / (1.0 + g * g - 2.0 * g * np.cos(theta)) / np.pi


def kernel_K_L(t, s, L: float):
    """Finite-window prediction kernel for the quotient-space field."""
    s = _check_window(s, L)
    g = np.asarray(g_map(t, L))
    u = s / L
    val = (1.0 - g * g) / ((1.0 - g) ** 2 - 2.0 * g * u) / np.sqrt(1.0 - (1.0 + u) ** 2)
    return _out(val / (np.pi * L))


def phi(s):
    """Equilibrium density on ]-1, 0[: ``1 / (2 pi ln2 sqrt(-s - s^2))``."""
    s = np.asarray(s, dtype=float)
    if np.any((s <= -1) | (s >= 0)):
        raise KernelDomainError("phi needs -1 < s < 0")
    return _out(1.0 / (2 * np.pi * LN2 * np.sqrt(-s - s * s)))


def arcsine_log_potential(t: float, tol: float = 1e-10) -> float:
    """``int_0^2 ln|t - s| / sqrt(2s - s^2) ds``; equals ``-pi ln 2`` for t in [0, 2]."""
    spec = SingularitySpec(Singularity.INV_SQRT_BOTH, breakpoints=(t,) if 0 < t < 2 else ())

    def f(s):
        d = abs(t - s)
        return math.log(d) / math.sqrt(2 * s - s * s) if d > 0 else 0.0

    return integrate_1d(f, 0.0, 2.0, spec, tol).value


def phi_log_potential(x: float, tol: float = 1e-10) -> float:
    """``int_{-1}^0 ln(1/|x - s|) phi(s) ds`` by quadrature, any real x."""
    spec = SingularitySpec(Singularity.INV_SQRT_BOTH, breakpoints=(x,) if -1 < x < 0 else ())

    def f(s):
        d = abs(x - s)
        return -math.log(d) / (2 * math.pi * LN2 * math.sqrt(-s - s * s)) if d > 0 else 0.0

    return integrate_1d(f, -1.0, 0.0, spec, tol).value


def _k_conv_phi_closed(x):
    x = np.asarray(x, dtype=float)
    return 1.0 - np.log(np.sqrt(x) + np.sqrt(x + 1.0)) / LN2


@lru_cache(maxsize=1)
def closed_form_verified() -> bool:
    """Check the closed form of ``k * phi`` against quadrature on [0, 10]."""
    grid = np.linspace(0.0, 10.0, 41)
    return all(abs(_k_conv_phi_closed(x) - phi_log_potential(x)) <= 1e-6 for x in grid)


def k_conv_phi(x, method: str = "auto"):
    """Log potential of phi at ``x >= 0``.

    ``method`` is "quadrature", "closed" or "auto"; auto uses the closed form
    ``1 - ln(sqrt(x) + sqrt(x+1)) / ln 2`` only once it has been verified
    against quadrature.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise KernelDomainError("k_conv_phi needs x >= 0")
    if method == "auto":
        method = "closed" if closed_form_verified() else "quadrature"
    if method == "closed":
        return _out(_k_conv_phi_closed(x))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    return _out(np.vectorize(phi_log_potential, otypes=[float])(x))


def kernel_mass(t: float, L: float | None = None, tol: float = 1e-11) -> float:
    """Total mass of K(t, .) over ]-inf, 0[ (L=None) or of K_L(t, .) over ]-2L, 0[."""
    if L is None:
        f = lambda v: float(kernel_K(t, -v)) if v > 0 else 0.0
        return integrate_1d(f, 0.0, math.inf, SingularitySpec(Singularity.INV_SQRT_LEFT), tol).value
    guard = 2 * _ENDPOINT_GUARD * L
    f = lambda s: float(kernel_K_L(t, s, L)) if -2 * L + guard < s < -guard else 0.0
    return integrate_1d(f, -2 * L, 0.0, SingularitySpec(Singularity.INV_SQRT_BOTH), tol).value


def phi_LT(s, L: float, T: float):
    """``1 / ((2 pi ln2 + pi ln(T/2L)) sqrt(-s (s + 2L)))``."""
    if not 2 * L <= T:
        raise KernelDomainError("need 2L <= T")
    s = np.asarray(s, dtype=float)
    if np.any((s <= -2 * L) | (s >= 0)):
        raise KernelDomainError("phi_LT needs -2L < s < 0")
    return _out(1.0 / ((2 * np.pi * LN2 + np.pi * math.log(T / (2 * L))) * np.sqrt(-s * (s + 2 * L))))


def correction_coefficient(t, L: float, T: float):
    """Coefficient of the arcsine term in K_{L,T}; vanishes as t -> 0 and T -> inf."""
    return _out((k_conv_phi(np.asarray(t, dtype=float) / (2 * L)) - 1.0)
                / (1.0 + math.log(T / (2 * L)) / (2 * LN2)))


def kernel_K_LT(t, s, L: float, T: float):
    """Prediction kernel for the field with finite correlation length T."""
    WindowGeometry(L, T)
    t = np.asarray(t, dtype=float)
    if np.any((t <= 0) | (t >= T - 2 * L)):
        raise KernelDomainError("kernel_K_LT needs 0 < t < T - 2L")
    s = _check_window(s, L)
    arcsine = 1.0 / (np.pi * np.sqrt(-s * (2 * L + s)))
    return _out(kernel_K_L(t, s, L) + correction_coefficient(t, L, T) * arcsine)


def predict(t: float, f, L: float, T: float | None = None, tol: float = 1e-10) -> float:
    """``int K(t, s) f(s) ds`` over the window, K = K_{L,T} or K_L (T=None).

    Integrates in the angle variable, where the kernel is smooth.
    """
    g = float(g_map(t, L))
    a = 0.0 if T is None else float(correction_coefficient(t, L, T))

    def integrand(theta):
        return (poisson_weight(g, theta) + a / np.pi) * f(L * (math.cos(theta) - 1.0))

    return integrate_1d(integrand, 0.0, math.pi, None, tol).value


def pred_constant_integrand(theta, psi):
    """Substituted integrand ``ln|tan^2 theta - tan^2 psi|`` (symmetric)."""
    with np.errstate(divide="ignore"):
        return np.log(np.abs(np.tan(theta) ** 2 - np.tan(psi) ** 2))


_constants_cache: dict[float, ForecastConstants] = {}
_constants_lock = threading.Lock()


def compute_pred_constant(tol: float = DEFAULT_TOL_2D) -> ForecastConstants:
    """The constant C in the residual variance ``E[Z_n^2] = ln n + C``.

    C = (1/pi^2) int int ln|s - s'| / ((1+s)(1+s') sqrt(s s')) ds ds'
      = (4/pi^2) int int ln|tan^2 theta - tan^2 psi| over [0, pi/2]^2.

    The integrand is symmetric, so only the triangle psi < theta is
    integrated.  The result is cached per tolerance.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    with _constants_lock:
        if tol in _constants_cache:
            return _constants_cache[tol]

    half = math.pi / 2

    def inner(theta):
        f = lambda psi: float(pred_constant_integrand(theta, psi))
        return integrate_1d(f, 0.0, theta, None, 0.02 * tol).value if theta > 0 else 0.0

    res = integrate_1d(inner, 0.0, half, None, 0.1 * tol)
    c = 8.0 / math.pi**2 * res.value
    if not res.converged or abs(c - PRED_CONSTANT_EXACT) > max(10 * tol, 1e-6):
        raise NumericalGateError(f"forecast constant failed its check: {c!r}")
    out = ForecastConstants(c, tol)
    with _constants_lock:
        return _constants_cache.setdefault(tol, out)


def compute_pred_constant_2d(tol: float = DEFAULT_TOL_2D):
    """Same constant over the full square with the diagonal splitter."""
    half = math.pi / 2
    res = integrate_2d(lambda a, b: float(pred_constant_integrand(a, b)),
                       [(0.0, half), (0.0, half)], tol=0.1 * tol, diagonal=True)
    return 4.0 / math.pi**2 * res.value, 4.0 / math.pi**2 * res.error_estimate


def compute_pred_constant_mc(n_samples: int = 1_000_000, seed: int = 0):
    """Monte Carlo estimate of the constant; returns (value, standard error)."""
    half = math.pi / 2
    res = integrate_4d_mc(
        lambda a, b, _c, _d: pred_constant_integrand(a, b),
        [(0.0, half), (0.0, half), (0.0, 1.0), (0.0, 1.0)],
        n_samples, seed,
    )
    return 4.0 / math.pi**2 * res.value, 4.0 / math.pi**2 * res.error_estimate


def residual_variance(n: int, constants: ForecastConstants) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.log(n) + constants.c_pred
