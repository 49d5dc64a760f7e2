"""Ordinary least squares and ridge regression via centered normal equations."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import linalg

from ._base import IllConditionedWarning, MultiOutputRegressor, SolveError


def _spd_solve(A, B):
    """Solve ``A @ Z = B`` for symmetric positive definite ``A``.

    Falls back to a rank-revealing least-squares solve, with a warning
    carrying the condition estimate, if the Cholesky factorization fails.
    """
    try:
        return linalg.cho_solve(linalg.cho_factor(A, lower=True, check_finite=False), B)
    except linalg.LinAlgError:
        cond = np.linalg.cond(A)
        warnings.warn(
            f"Cholesky factorization failed (condition number {cond:.3e}); "
            "falling back to least squares",
            IllConditionedWarning,
            stacklevel=3,
        )
        return linalg.lstsq(A, B, lapack_driver="gelsd")[0]


def solve_least_squares(X, Y, lam=0.0, penalize_intercept=False):
    """Fit ``Y ~ X @ W.T + b`` under an L2 penalty on ``W``.

    Minimizes ``(1/2N) sum ||W x + b - y||^2 + (lam/2N) ||W||_F^2``.

    Parameters
    ----------
    X : ndarray of shape (N, D)
    Y : ndarray of shape (N, L)
    lam : float
        Penalty weight. ``0`` gives ordinary least squares solved by a
        rank-revealing (minimum-norm) solver.
    penalize_intercept : bool
        Shrink the intercept as well. By default it is left free and
        recovered from the column means.

    Returns
    -------
    W : ndarray of shape (L, D)
    b : ndarray of shape (L,)
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, d = X.shape

    if penalize_intercept:
        Xa = np.hstack([X, np.ones((n, 1))])
        if lam == 0:
            coef = linalg.lstsq(Xa, Y, lapack_driver="gelsd")[0]
        else:
            coef = _spd_solve(Xa.T @ Xa + lam * np.eye(d + 1), Xa.T @ Y)
        W, b = coef[:d].T, coef[d]
    else:
        x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
        Xc, Yc = X - x_mean, Y - y_mean
        if lam == 0:
            Wt = linalg.lstsq(Xc, Yc, lapack_driver="gelsd")[0]
        elif d <= n:
            Wt = _spd_solve(Xc.T @ Xc + lam * np.eye(d), Xc.T @ Yc)
        else:
            # wide design: the N x N dual system gives the same solution
            Wt = Xc.T @ _spd_solve(Xc @ Xc.T + lam * np.eye(n), Yc)
        W = Wt.T
        b = y_mean - W @ x_mean

    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise SolveError("least-squares solve produced non-finite coefficients")
    return np.ascontiguousarray(W), b


class Ridge(MultiOutputRegressor):
    """Multi-output ridge regression with an unpenalized intercept.

    Parameters
    ----------
    alpha : float, default=1.0
        L2 penalty weight; ``0`` reduces to ordinary least squares.

    Attributes
    ----------
    coef_ : ndarray of shape (n_outputs, n_features)
    intercept_ : ndarray of shape (n_outputs,)
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, Y):
        X, Y = self._validate_fit(X, Y)
        self.coef_, self.intercept_ = solve_least_squares(X, Y, lam=float(self.alpha))
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        return self._output(X @ self.coef_.T + self.intercept_)


class LinearRegression(Ridge):
    """Ordinary least squares (ridge with ``alpha=0``)."""

    def __init__(self):
        pass

    @property
    def alpha(self):
        return 0.0
