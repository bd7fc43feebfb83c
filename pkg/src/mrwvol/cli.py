"""Command-line entry point: ``mrwvol <command> [options]``.

Exit codes: 0 ok, 2 configuration error, 3 numerical gate failure, 4 I/O error.
Errors are printed to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import io
from .estimation import (
    DEFAULT_LAG_WINDOW,
    DEFAULT_STEPS_PER_INTERVAL,
    VariogramEstimate,
    empirical_variogram,
    fit_loglinear,
    log_ranges,
)
from .forecast import VolHistory, forecast_sensitivity, forecast_vol
from .kernels import (
    ForecastConstants,
    NumericalGateError,
    arcsine_log_potential,
    compute_pred_constant,
    kernel_K_L,
    kernel_K_LT,
    kernel_mass,
    phi_log_potential,
)
from .pricing import PricingInputs, call_price, smile_curve
from .simulation import EmbeddingError, MrwParams, MrwPath, simulate_path

DEFAULT_SEED = 20240601

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_strikes(text: str) -> np.ndarray:
    """``lo:hi:step`` with both ends included."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"strikes must be lo:hi:step, got {text!r}") from exc
    if not (0 < lo <= hi and step > 0):
        raise ConfigError("strikes need 0 < lo <= hi and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _emit(payload: dict, out) -> None:
    if out:
        io.write_json(out, payload)
    else:
        print(io.dumps(payload))


def _constants(args) -> ForecastConstants:
    if args.c_pred is not None:
        return ForecastConstants(args.c_pred)
    return compute_pred_constant()


def cmd_simulate(args):
    params = MrwParams(args.sigma, args.lambda2, args.T, args.tau)
    length = int(round(args.days / args.tau))
    if length < 1:
        raise ConfigError("days / tau must give at least one step")
    path = simulate_path(params, length, args.seed)
    io.write_path_csv(args.out, path.returns, path.cumulative)


def cmd_variogram(args):
    y = io.read_path_csv(args.input)
    returns = np.diff(np.concatenate([[0.0], y]))
    # only the shape of the path matters for ranges; params are a placeholder
    path = MrwPath(returns, y, MrwParams(1.0, 0.0, 1.0, 1.0))
    ranges = log_ranges(path, args.steps_per_interval)
    v = empirical_variogram(ranges, args.max_lag)
    io.write_variogram_csv(args.out, v.lags, v.values, v.pair_counts)


def cmd_fit(args):
    lags, vals, pairs = io.read_variogram_csv(args.input)
    fit = fit_loglinear(VariogramEstimate(lags, vals, pairs), args.min_lag, args.max_lag)
    _emit({"lambda2_hat": fit.lambda2_hat, "intercept_hat": fit.intercept_hat,
           "residual_rms": fit.residual_rms, "lag_window": list(fit.lag_window)}, args.out)


def cmd_forecast(args):
    history = VolHistory(io.read_history_csv(args.history))
    constants = _constants(args)
    ns = np.arange(1, args.horizon + 1)
    fc = [forecast_vol(history, int(n), args.lambda2, constants) for n in ns]
    io.write_forecast_csv(args.out, ns, [f.value for f in fc],
                          [forecast_sensitivity(f, constants) for f in fc])


def cmd_price(args):
    history = VolHistory(io.read_history_csv(args.history), args.tau)
    inputs = PricingInputs(args.spot, args.maturity, args.window, args.lambda2, history, args.T)
    strikes = parse_strikes(args.strikes)
    constants = _constants(args)
    curve = smile_curve(inputs, strikes, constants, n_samples=args.samples,
                        seed=args.seed, workers=args.threads)
    prices = [call_price(inputs, k, v) if v > 0 else math.nan
              for k, v in zip(curve.strikes, curve.implied_vols)]
    io.write_pricing_csv(args.out, curve.strikes, curve.implied_vols, prices)
    payload = {"sigma_t2": curve.sigma_t2, "kappa_t": curve.kappa_t,
               "kappa_stderr": curve.kappa_stderr, "c_pred": constants.c_pred}
    _emit(payload, args.json)


def cmd_kernels(args):
    L, T = args.L, args.T
    ts = np.array(args.t if args.t else [0.1 * L, 0.5 * L, L])
    # interior Chebyshev-like points avoid the endpoint singularities
    theta = math.pi * (np.arange(args.points) + 0.5) / args.points
    s = L * (np.cos(theta) - 1.0)
    tt, ss = np.repeat(ts, s.size), np.tile(s, ts.size)
    io.write_kernels_csv(args.out, tt, ss, kernel_K_L(tt, ss, L), kernel_K_LT(tt, ss, L, T))


def selftest_checks():
    """Run the built-in identity checks; yields (name, passed, detail)."""
    ln2 = math.log(2)
    err = max(abs(arcsine_log_potential(0.1 + 0.2 * i) + math.pi * ln2) for i in range(10))
    yield "arcsine log potential = -pi ln 2", err <= 1e-6, err
    grid = -1 + (np.arange(20) + 0.5) / 20
    err = max(abs(phi_log_potential(x) - 1.0) for x in grid)
    yield "phi log potential = 1 on its support", err <= 1e-4, err
    err = max(max(abs(kernel_mass(t) - 1.0), abs(kernel_mass(t, 1.0) - 1.0)) for t in (0.01, 0.1, 1.0))
    yield "kernel normalisation", err <= 1e-8, err
    try:
        c = compute_pred_constant().c_pred
        yield "forecast constant", True, c
    except NumericalGateError as exc:
        yield "forecast constant", False, str(exc)


def cmd_selftest(args):
    ok = True
    for name, passed, detail in selftest_checks():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name} ({detail})")
    if not ok:
        raise NumericalGateError("selftest failed")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--threads", type=int, default=1)
    p = _Parser(prog="mrwvol", description="Multifractal random walk volatility toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="simulate one MRW path")
    s.add_argument("--lambda2", type=float, required=True)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--tau", type=float, required=True)
    s.add_argument("--days", type=float, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("variogram", parents=[common], help="logvariogram of interval ranges")
    s.add_argument("--input", required=True)
    s.add_argument("--steps-per-interval", type=int, default=DEFAULT_STEPS_PER_INTERVAL)
    s.add_argument("--max-lag", type=int, default=DEFAULT_LAG_WINDOW[1])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_variogram)

    s = sub.add_parser("fit", parents=[common], help="fit lambda^2 to a logvariogram")
    s.add_argument("--input", required=True)
    s.add_argument("--min-lag", type=int, default=DEFAULT_LAG_WINDOW[0])
    s.add_argument("--max-lag", type=int, default=DEFAULT_LAG_WINDOW[1])
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("forecast", parents=[common], help="volatility forecast from a history")
    s.add_argument("--history", required=True)
    s.add_argument("--lambda2", type=float, required=True)
    s.add_argument("--horizon", type=int, default=1)
    s.add_argument("--c-pred", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("price", parents=[common], help="smile and call prices")
    s.add_argument("--history", required=True)
    s.add_argument("--lambda2", type=float, required=True)
    s.add_argument("--spot", type=float, required=True)
    s.add_argument("--maturity", type=float, required=True)
    s.add_argument("--window", type=float, required=True)
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--T", type=float)
    s.add_argument("--strikes", required=True)
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--c-pred", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--json")
    s.set_defaults(func=cmd_price)

    s = sub.add_parser("kernels", parents=[common], help="tabulate K_L and K_LT")
    s.add_argument("--L", type=float, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--t", type=float, action="append")
    s.add_argument("--points", type=int, default=64)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_kernels)

    s = sub.add_parser("selftest", parents=[common], help="run the built-in identity checks")
    s.set_defaults(func=cmd_selftest)
    return p


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        args.func(args)
    except NumericalGateError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (EmbeddingError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except io.SchemaError as exc:
        return _fail(EXIT_IO, exc)
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
