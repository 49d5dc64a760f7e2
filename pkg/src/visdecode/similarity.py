"""Similarity metrics between predicted and prototype feature vectors.

Each metric exists in two flavours: a scalar function on a pair of vectors
that raises on degenerate input, and a vectorized ``*_matrix`` form that
scores every row of ``A`` against every row of ``B`` and marks undefined
entries with NaN.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .core import METRICS, DecodingError, DimensionError


class UndefinedSimilarity(DecodingError, ArithmeticError):
    pass


def _pair(a, b, min_len=1):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < min_len:
        raise DimensionError(f"vectors need at least {min_len} entries")
    return a, b


# largest similarity a pair of distinct vectors can get; 1.0 is reserved for equality
_BELOW_ONE = np.nextafter(1.0, 0.0)


def _rescale(M):
    # angle-based metrics are scale invariant; unit max-abs rows avoid under/overflow
    peak = np.abs(M).max(axis=-1, keepdims=True)
    return M / np.where(peak == 0, 1.0, peak)


def euclidean_sim(a, b) -> float:
    a, b = _pair(a, b)
    if np.array_equal(a, b):
        return 1.0
    return min(1.0 / (1.0 + float(np.linalg.norm(a - b))), _BELOW_ONE)


def cosine_sim(a, b) -> float:
    a, b = _pair(a, b)
    if not a.any() or not b.any():
        raise UndefinedSimilarity("undefined cosine: zero-norm vector")
    a, b = _rescale(a), _rescale(b)
    return float(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0))


def pearson_sim(a, b) -> float:
    # each vector is centered by its own mean
    a, b = _pair(a, b, min_len=2)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedSimilarity("undefined correlation: constant vector")
    a = _rescale(a - a.mean())
    b = _rescale(b - b.mean())
    return float(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0))


SIMILARITIES = {
    "euclidean": euclidean_sim,
    "cosine": cosine_sim,
    "pearson": pearson_sim,
}


def get_similarity(metric: str):
    try:
        return SIMILARITIES[metric]
    except KeyError:
        raise DecodingError(f"unknown metric {metric!r}; expected one of {METRICS}") from None


def _rows(A, B):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"length mismatch: {A.shape[1]} vs {B.shape[1]}")
    return A, B


def _cosine_rows(A, B):
    A, B = _rescale(A), _rescale(B)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        S = (A @ B.T) / np.outer(na, nb)
    S = np.clip(S, -1.0, 1.0)
    S[na == 0, :] = np.nan
    S[:, nb == 0] = np.nan
    return S


def similarity_matrix(A, B, metric: str) -> np.ndarray:
    """Similarity of every row of ``A`` (M x L) to every row of ``B`` (K x L).

    Returns an M x K array; entries where the metric is undefined are NaN.
    """
    get_similarity(metric)
    A, B = _rows(A, B)
    if metric == "euclidean":
        S = 1.0 / (1.0 + cdist(A, B))
        for i, k in zip(*np.nonzero(S == 1.0)):
            if not np.array_equal(A[i], B[k]):
                S[i, k] = _BELOW_ONE
        return S
    if metric == "cosine":
        return _cosine_rows(A, B)
    if A.shape[1] < 2:
        raise DimensionError("pearson needs at least 2 entries per vector")
    S = _cosine_rows(A - A.mean(1, keepdims=True), B - B.mean(1, keepdims=True))
    S[np.ptp(A, axis=1) == 0, :] = np.nan
    S[:, np.ptp(B, axis=1) == 0] = np.nan
    return S
