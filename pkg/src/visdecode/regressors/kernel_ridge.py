"""Polynomial kernel ridge regression in dual form."""

from __future__ import annotations

import numpy as np

from ._base import MultiOutputRegressor, SolveError
from .linear import _spd_solve


def polynomial_kernel(a, b, gamma, coef, degree) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return float((gamma * (a @ b) + coef) ** degree)


def polynomial_kernel_matrix(A, B, gamma, coef, degree) -> np.ndarray:
    return (gamma * (np.asarray(A) @ np.asarray(B).T) + coef) ** degree


def resolve_gamma(gamma, n_features) -> float:
    return 1.0 / n_features if gamma == "auto" else float(gamma)


def kernel_ridge_fit(X, Y, lam, gamma, coef=10.0, degree=2) -> np.ndarray:
    """Dual coefficients ``(K + lam I)^-1 Y`` of the polynomial kernel."""
    if lam <= 0:
        raise ValueError("kernel ridge requires lam > 0")
    X = np.asarray(X, dtype=np.float64)
    K = polynomial_kernel_matrix(X, X, gamma, coef, degree)
    K[np.diag_indices_from(K)] += lam
    alpha = _spd_solve(K, np.asarray(Y, dtype=np.float64))
    if not np.all(np.isfinite(alpha)):
        raise SolveError("kernel ridge solve produced non-finite dual coefficients")
    return alpha


class PolyKernelRidge(MultiOutputRegressor):
    """Kernel ridge regression with ``k(a, b) = (gamma <a, b> + coef0) ** degree``.

    No separate intercept: the kernel constant absorbs it.

    Parameters
    ----------
    alpha : float, default=0.005
        Regularizer weight.
    degree : int, default=2
    coef0 : float, default=10.0
    gamma : float or "auto", default="auto"
        ``"auto"`` resolves to ``1 / n_features`` at fit time.

    Attributes
    ----------
    dual_coef_ : ndarray of shape (n_samples, n_outputs)
    X_fit_ : ndarray of shape (n_samples, n_features)
    gamma_ : float
    """

    def __init__(self, alpha=0.005, degree=2, coef0=10.0, gamma="auto"):
        self.alpha = alpha
        self.degree = degree
        self.coef0 = coef0
        self.gamma = gamma

    def fit(self, X, Y):
        X, Y = self._validate_fit(X, Y)
        self.gamma_ = resolve_gamma(self.gamma, X.shape[1])
        self.dual_coef_ = kernel_ridge_fit(
            X, Y, float(self.alpha), self.gamma_, float(self.coef0), int(self.degree)
        )
        self.X_fit_ = X
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        K = polynomial_kernel_matrix(X, self.X_fit_, self.gamma_, self.coef0, self.degree)
        return self._output(K @ self.dual_coef_)
