"""Numerical integration for the singular integrands used by the kernels.

The singularity classes handled here are the ones that show up in the
prediction kernels and constants: inverse square-root endpoint
singularities, integrable logarithmic singularities at interior points,
semi-infinite domains and a 4D Monte Carlo integral.  Inverse square-root
singularities are removed by a change of variables before handing the
smooth integrand to adaptive Gauss-Kronrod (QUADPACK via scipy).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

DEFAULT_TOL_1D = 1e-8
DEFAULT_TOL_2D = 1e-6
DEFAULT_MC_SAMPLES = 1_000_000
MC_SHARD_SIZE = 1 << 16
_QUAD_LIMIT = 500


class Singularity(str, Enum):
    NONE = "none"
    INV_SQRT_LEFT = "inv_sqrt_left"
    INV_SQRT_RIGHT = "inv_sqrt_right"
    INV_SQRT_BOTH = "inv_sqrt_both"
    LOG_INTERIOR = "log_interior"


@dataclass(frozen=True)
class SingularitySpec:
    """Where an integrand misbehaves.

    ``location`` is the interior log singularity and is required exactly when
    ``kind`` is ``log_interior``.  ``breakpoints`` lists further interior
    points (in the original variable) with integrable log singularities; they
    are carried through any change of variables.
    """

    kind: Singularity = Singularity.NONE
    location: float | None = None
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Singularity(self.kind))
        object.__setattr__(self, "breakpoints", tuple(float(p) for p in self.breakpoints))
        if (self.kind is Singularity.LOG_INTERIOR) != (self.location is not None):
            raise ValueError("location is required iff kind is log_interior")


NO_SINGULARITY = SingularitySpec()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be non-negative")


def _change_of_variables(f, a, b, kind):
    """Return (g, lo, hi, to_new) with int_a^b f = int_lo^hi g."""
    if math.isinf(b):
        if kind not in (Singularity.NONE, Singularity.INV_SQRT_LEFT):
            raise ValueError(f"{kind.value} is not supported on a semi-infinite domain")

        # s = a + tan^2(theta) turns 1/((1+s) sqrt(s)) into a constant.
        def g(th):
            tn = math.tan(th)
            return f(a + tn * tn) * 2.0 * tn / math.cos(th) ** 2

        return g, 0.0, math.pi / 2, lambda p: math.atan(math.sqrt(p - a))

    w = b - a
    if kind is Singularity.INV_SQRT_LEFT:
        return (lambda u: f(a + w * u * u) * 2.0 * w * u), 0.0, 1.0, lambda p: math.sqrt((p - a) / w)
    if kind is Singularity.INV_SQRT_RIGHT:
        return (lambda u: f(b - w * u * u) * 2.0 * w * u), 0.0, 1.0, lambda p: math.sqrt((b - p) / w)
    if kind is Singularity.INV_SQRT_BOTH:
        # s = a + w sin^2 v, ds = w sin(2v) dv = 2 sqrt((s-a)(b-s)) dv
        def g(v):
            sv = math.sin(v)
            return f(a + w * sv * sv) * w * math.sin(2.0 * v)

        return g, 0.0, math.pi / 2, lambda p: math.asin(math.sqrt((p - a) / w))
    return f, a, b, lambda p: p


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: SingularitySpec | None = None,
    tol: float = DEFAULT_TOL_1D,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b]`` (``b`` may be ``inf``).

    ``f`` is the full integrand, including any singular factor declared by
    ``spec``; the substitution's Jacobian cancels that factor.  On
    non-convergence the best estimate is returned with ``converged=False``.
    """
    spec = spec or NO_SINGULARITY
    if not a < b:
        raise ValueError("need a < b")
    if not tol > 0:
        raise ValueError("tol must be positive")

    g, lo, hi, to_new = _change_of_variables(f, a, b, spec.kind)
    raw = list(spec.breakpoints)
    if spec.location is not None:
        raw.append(spec.location)
    points = sorted({to_new(p) for p in raw if a < p < b})
    points = [p for p in points if lo < p < hi]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            g, lo, hi, epsabs=tol, epsrel=tol, limit=_QUAD_LIMIT,
            points=points or None, full_output=1,
        )
    value, err, info = out[:3]
    # with full_output, a failure is reported by an extra message entry
    converged = len(out) == 3 and math.isfinite(value)
    return QuadratureResult(float(value), float(abs(err)), int(info["neval"]), converged)


def integrate_2d(
    f: Callable[[float, float], float],
    domain: Sequence[tuple[float, float]],
    specs: Sequence[SingularitySpec | None] = (None, None),
    tol: float = DEFAULT_TOL_2D,
    diagonal: bool = False,
) -> QuadratureResult:
    """Iterated adaptive integration of ``f(x, y)`` over a rectangle.

    With ``diagonal=True`` the integrand may carry an integrable log
    singularity along ``x == y``; the inner integral is split there so the
    adaptive rule refines towards the diagonal from both sides.
    """
    (ax, bx), (ay, by) = domain
    spec_x, spec_y = (s or NO_SINGULARITY for s in specs)
    inner_tol = 0.1 * tol / max(1.0, bx - ax) if math.isfinite(bx) else 0.1 * tol
    inner_err = 0.0
    inner_evals = 0
    inner_ok = True

    def outer(x):
        nonlocal inner_err, inner_evals, inner_ok
        sy = spec_y
        if diagonal and ay < x < by:
            sy = SingularitySpec(spec_y.kind, spec_y.location, spec_y.breakpoints + (x,))
        r = integrate_1d(lambda y: f(x, y), ay, by, sy, inner_tol)
        inner_err = max(inner_err, r.error_estimate)
        inner_evals += r.evaluations
        inner_ok = inner_ok and r.converged
        return r.value

    res = integrate_1d(outer, ax, bx, spec_x, tol)
    width = (bx - ax) if math.isfinite(bx) else 1.0
    return QuadratureResult(
        res.value,
        res.error_estimate + width * inner_err,
        res.evaluations + inner_evals,
        res.converged and inner_ok,
    )


def _sample_axis(rng, n, lo, hi, spec):
    """Draw one coordinate and return (points, 1/density)."""
    if spec.kind is Singularity.INV_SQRT_BOTH:
        # arcsine law: density 1 / (pi sqrt((s-lo)(hi-s)))
        v = rng.uniform(0.0, math.pi, n)
        x = lo + (hi - lo) * 0.5 * (1.0 - np.cos(v))
        inv_density = math.pi * np.sqrt(np.maximum((x - lo) * (hi - x), 0.0))
        return x, inv_density
    if spec.kind is not Singularity.NONE:
        raise ValueError(f"Monte Carlo sampling does not support {spec.kind.value}")
    return rng.uniform(lo, hi, n), np.full(n, hi - lo)


def integrate_4d_mc(
    f: Callable[..., np.ndarray],
    domain: Sequence[tuple[float, float]],
    n_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    specs: Sequence[SingularitySpec | None] | None = None,
    workers: int = 1,
) -> QuadratureResult:
    """Monte Carlo estimate of a 4D integral with its standard error.

    ``f`` is vectorised: it receives four coordinate arrays.  Axes declared
    ``inv_sqrt_both`` are drawn from the arcsine law, which absorbs the
    inverse square-root factor into the sampling density.  Samples are split
    into fixed shards with seeds spawned from ``seed``, so the result does not
    depend on ``workers``.
    """
    if len(domain) != 4:
        raise ValueError("domain must have four intervals")
    specs = [s or NO_SINGULARITY for s in (specs or [None] * 4)]
    n_shards = max(1, -(-n_samples // MC_SHARD_SIZE))
    sizes = [MC_SHARD_SIZE] * (n_shards - 1) + [n_samples - MC_SHARD_SIZE * (n_shards - 1)]
    seeds = np.random.SeedSequence(seed).spawn(n_shards)

    def shard(i):
        rng = np.random.default_rng(seeds[i])
        coords, weight = [], np.ones(sizes[i])
        for (lo, hi), spec in zip(domain, specs):
            x, w = _sample_axis(rng, sizes[i], lo, hi, spec)
            coords.append(x)
            weight = weight * w
        vals = np.asarray(f(*coords), dtype=float) * weight
        return vals.sum(), np.square(vals).sum()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(shard, range(n_shards)))
    else:
        parts = [shard(i) for i in range(n_shards)]

    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return QuadratureResult(mean, math.sqrt(var / n_samples), n_samples, bool(np.isfinite(mean)))
