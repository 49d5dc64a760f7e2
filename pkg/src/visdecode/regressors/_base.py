from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..core import DecodingError, DimensionError


class SolveError(DecodingError, np.linalg.LinAlgError):
    """A linear solve produced non-finite output."""


class IllConditionedWarning(RuntimeWarning):
    pass


class TrainingError(DecodingError, FloatingPointError):
    pass


class MultiOutputRegressor(RegressorMixin, BaseEstimator):
    """Input checks shared by every model in the zoo.

    Targets may be 1-D or 2-D; predictions come back with the same rank.
    """

    def _validate_fit(self, X, Y):
        X = check_array(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        self._ravel = Y.ndim == 1
        Y = check_array(Y.reshape(-1, 1) if self._ravel else Y, dtype=np.float64)
        if X.shape[0] != Y.shape[0]:
            raise DimensionError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = Y.shape[1]
        return X, Y

    def _validate_predict(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X has {X.shape[1]} features, model was fit with {self.n_features_in_}"
            )
        return X

    def _output(self, out):
        return out.ravel() if self._ravel else out
