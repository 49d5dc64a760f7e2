from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ..core import DecodingError
from ._base import MultiOutputRegressor


def _combine(dist, targets):
    # exact matches dominate: 1/d is singular at d=0
    exact = dist == 0
    if exact.any():
        return targets[exact].mean(axis=0)
    w = 1.0 / dist
    return w @ targets / w.sum()


def knn_predict(X, Y, k, q):
    """Inverse-distance weighted mean of the targets of the ``k`` nearest rows of ``X``.

    Ties at the k-th distance are broken by row order.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if k > X.shape[0]:
        raise DecodingError(f"k={k} exceeds {X.shape[0]} stored samples")
    dist = cdist(np.asarray(q, dtype=np.float64).reshape(1, -1), X)[0]
    nearest = np.argsort(dist, kind="stable")[:k]
    return _combine(dist[nearest], Y[nearest])


class KNNRegressor(MultiOutputRegressor):
    """Distance-weighted k-nearest-neighbour regression (Euclidean, weights 1/d).

    Parameters
    ----------
    n_neighbors : int, default=5
    """

    def __init__(self, n_neighbors=5):
        self.n_neighbors = n_neighbors

    def fit(self, X, Y):
        X, Y = self._validate_fit(X, Y)
        if X.shape[0] < self.n_neighbors:
            raise DecodingError(f"k={self.n_neighbors} exceeds {X.shape[0]} training samples")
        self.X_fit_, self.Y_fit_ = X, Y
        return self

    def predict(self, X):
        X = self._validate_predict(X)
        k = self.n_neighbors
        out = np.empty((X.shape[0], self.n_outputs_))
        # chunked so the distance block stays small for large test sets
        for start in range(0, X.shape[0], 512):
            block = cdist(X[start:start + 512], self.X_fit_)
            order = np.argsort(block, axis=1, kind="stable")[:, :k]
            for i, nearest in enumerate(order):
                out[start + i] = _combine(block[i, nearest], self.Y_fit_[nearest])
        return self._output(out)
