"""CSV and JSON readers/writers for the command-line tool.

CSV files always carry a header row, use a decimal point and are UTF-8.
Floats are written with ``repr`` so a round trip is exact.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

FORMAT_VERSION = "1"


class SchemaError(ValueError):
    """Input file does not match the expected columns or value types."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, columns) -> None:
    """Write equal-length ``columns`` under ``header``."""
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header) or len({len(c) for c in cols}) > 1:
        raise SchemaError("columns must match the header and have equal lengths")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def read_csv(path, required=None) -> dict[str, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: missing header row")
        fields = [f.strip() for f in reader.fieldnames]
        missing = [c for c in (required or []) if c not in fields]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        out = {f: [] for f in fields}
        for row in reader:
            for raw, f in zip(reader.fieldnames, fields):
                out[f].append((row[raw] or "").strip())
    return out


def _floats(values, name):
    try:
        arr = np.array([float(v) for v in values])
    except ValueError as exc:
        raise SchemaError(f"column {name!r} must be numeric") from exc
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"column {name!r} has non-finite values")
    return arr


def read_path_csv(path) -> np.ndarray:
    """Cumulative log price from ``step_index,cumulative_log_price``,
    ``step,return,cumulative`` (simulate output) or ``date,price``."""
    data = read_csv(path)
    if "cumulative_log_price" in data:
        y = _floats(data["cumulative_log_price"], "cumulative_log_price")
    elif "cumulative" in data:
        y = _floats(data["cumulative"], "cumulative")
    elif "price" in data:
        p = _floats(data["price"], "price")
        if np.any(p <= 0):
            raise SchemaError("prices must be positive")
        y = np.log(p / p[0])
    else:
        raise SchemaError(f"{path}: need a cumulative_log_price, cumulative or price column")
    if y.size == 0:
        raise SchemaError(f"{path}: no data rows")
    return y


def write_path_csv(path, returns, cumulative) -> None:
    write_csv(path, ["step", "return", "cumulative"], [np.arange(len(returns)), returns, cumulative])


def write_variogram_csv(path, lags, values, pairs) -> None:
    write_csv(path, ["lag", "variogram", "pairs"], [lags, values, pairs])


def read_variogram_csv(path):
    data = read_csv(path, ["lag", "variogram"])
    lags = _floats(data["lag"], "lag").astype(int)
    vals = _floats(data["variogram"], "variogram")
    pairs = _floats(data["pairs"], "pairs").astype(int) if "pairs" in data else np.zeros_like(lags)
    return lags, vals, pairs


def read_history_csv(path) -> np.ndarray:
    """Volatilities ordered most recent first (k = 0, 1, ...)."""
    data = read_csv(path, ["k", "sigma"])
    k = _floats(data["k"], "k")
    sig = _floats(data["sigma"], "sigma")
    if sig.size == 0:
        raise SchemaError(f"{path}: empty history")
    order = np.argsort(k, kind="stable")
    if not np.array_equal(k[order], np.arange(k.size)):
        raise SchemaError("k must be 0, 1, ..., N")
    return sig[order]


def write_forecast_csv(path, n, forecast, sensitivity) -> None:
    write_csv(path, ["n", "forecast", "sensitivity"], [n, forecast, sensitivity])


def write_pricing_csv(path, strikes, vols, prices) -> None:
    write_csv(path, ["strike", "implied_vol", "call_price"], [strikes, vols, prices])


def write_kernels_csv(path, t, s, k_l, k_lt) -> None:
    write_csv(path, ["t", "s", "K_L", "K_LT"], [t, s, k_l, k_lt])


def dumps(payload: dict) -> str:
    """JSON text with a version field; non-finite floats become null."""
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, np.generic):
            return clean(v.item())
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    return json.dumps({"version": FORMAT_VERSION, **clean(payload)}, sort_keys=True)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(dumps(payload) + "\n", encoding="utf-8")
