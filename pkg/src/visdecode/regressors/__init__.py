"""Regression models mapping brain-activity vectors to visual feature vectors."""

from ..core import RegressorSpec
from ._base import IllConditionedWarning, SolveError, TrainingError
from .kernel_ridge import (
    PolyKernelRidge,
    kernel_ridge_fit,
    polynomial_kernel,
    polynomial_kernel_matrix,
)
from .linear import LinearRegression, Ridge, solve_least_squares
from .mlp import (
    AdamState,
    MLPRegressor,
    MlpParams,
    adam_step,
    mlp_backward,
    mlp_fit,
    mlp_forward,
    mlp_loss,
)
from .neighbors import KNNRegressor, knn_predict


def make_regressor(spec: RegressorSpec, seed=None):
    """Unfitted estimator for ``spec``; ``seed`` overrides the MLP seed."""
    if spec.kind == "knn":
        return KNNRegressor(n_neighbors=spec.k)
    if spec.kind == "linear":
        return LinearRegression()
    if spec.kind == "ridge":
        return Ridge(alpha=spec.lam)
    if spec.kind == "kernel_ridge":
        kp = spec.kernel
        return PolyKernelRidge(alpha=spec.lam, degree=kp.degree, coef0=kp.coef, gamma=kp.gamma)
    m = spec.mlp
    return MLPRegressor(
        hidden_units=m.hidden_units,
        epochs=m.epochs,
        batch_size=m.batch_size,
        learning_rate=m.learning_rate,
        dropout_rate=m.dropout_rate,
        random_state=m.seed if seed is None else seed,
    )


def fit(spec: RegressorSpec, X, Y, seed=None):
    return make_regressor(spec, seed).fit(X, Y)


def predict(model, X):
    return model.predict(X)


__all__ = [
    "AdamState",
    "IllConditionedWarning",
    "KNNRegressor",
    "LinearRegression",
    "MLPRegressor",
    "MlpParams",
    "PolyKernelRidge",
    "Ridge",
    "SolveError",
    "TrainingError",
    "adam_step",
    "fit",
    "kernel_ridge_fit",
    "knn_predict",
    "make_regressor",
    "mlp_backward",
    "mlp_fit",
    "mlp_forward",
    "mlp_loss",
    "polynomial_kernel",
    "polynomial_kernel_matrix",
    "predict",
    "solve_least_squares",
]
