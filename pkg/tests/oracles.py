"""Brute-force reference computations that share no code with the package.

The continuous log-correlated field ``cov(X_s, X_u) = ln T - ln|s - u|`` is
discretised into cell averages on a uniform grid; cell-average covariances
are exact (closed-form antiderivatives of ln|x|), so the discrete Gaussian
conditioning converges to the continuous one as the grid is refined.
"""

import numpy as np
from scipy.linalg import solve_toeplitz, toeplitz


def _G(x):
    # second antiderivative of ln|x|, G'' = ln|x|, G(0) = 0
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    m = x > 0
    out[m] = x[m] ** 2 * np.log(x[m]) / 2 - 0.75 * x[m] ** 2
    return out


def _H(x):
    # antiderivative of ln|x|
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x != 0
    out[m] = x[m] * np.log(np.abs(x[m])) - x[m]
    return out


def cell_covariance(n, h, T):
    """cov of cell averages at lags 0..n-1 for cells of width h."""
    m = np.arange(n) * h
    return np.log(T) - (_G(m + h) - 2 * _G(m) + _G(m - h)) / h**2


def conditional_expectation_weights(t, L, T, n_cells):
    """Weights w with E[X_t | cell averages on ]-2L, 0[] = sum w_j Xbar_j."""
    h = 2 * L / n_cells
    edges = -2 * L + h * np.arange(n_cells + 1)
    d = t - edges
    # cov(X_t, Xbar_j) = ln T - (1/h) int_cell ln|t - v| dv
    cross = np.log(T) + (_H(d[1:]) - _H(d[:-1])) / h
    return solve_toeplitz(cell_covariance(n_cells, h, T), cross), edges


def conditional_expectation(t, f, L, T, n_cells=2000):
    """sum_j w_j f(cell midpoint): E[X_t | window] for the path X = f."""
    w, edges = conditional_expectation_weights(t, L, T, n_cells)
    mids = 0.5 * (edges[1:] + edges[:-1])
    return float(w @ f(mids))


def residual_variance_discrete(t, L, T, n_window, n_future=None):
    """Var(int_0^t X - E[. | window]) with everything on one cell grid."""
    h = 2 * L / n_window
    n_future = n_future or int(round(t / h))
    n = n_window + n_future
    S = toeplitz(cell_covariance(n, h, T))
    s_ww = S[:n_window, :n_window]
    s_wf = S[:n_window, n_window:]
    a = np.full(n_future, h)  # int_0^t X = h * sum of future cell averages
    b = s_wf @ a
    return float(a @ S[n_window:, n_window:] @ a - b @ np.linalg.solve(s_ww, b))


def exact_weights_dense(n, N, T_over_tau):
    """Best linear predictor of X_n from X_0..X_-N by a dense solve."""
    def c(lag):
        return np.maximum(0.0, np.log(T_over_tau / (np.abs(lag) + 1.0)))

    idx = np.arange(N + 1)
    cov = c(np.subtract.outer(idx, idx))
    rhs = c(n + idx)
    w = np.linalg.solve(cov, rhs)
    return w, float(c(0) - w @ rhs)
