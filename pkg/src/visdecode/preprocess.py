"""Z-score normalization, ROI column selection and class prototypes."""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import (
    Dataset,
    DecodingError,
    DimensionError,
    NormStats,
    PrototypeSet,
    RoiMask,
    as_labels,
    as_matrix,
    encode_labels,
)

# columns with a smaller population std are treated as constant
STD_FLOOR = 1e-12


def fit_zscore(m) -> NormStats:
    m = as_matrix(m)
    if m.shape[0] < 2:
        raise DecodingError("insufficient rows for statistics")
    mean = m.mean(axis=0)
    std = m.std(axis=0)  # population (ddof=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return NormStats(mean=mean, std=std)


def _check_stats(m, s: NormStats) -> np.ndarray:
    m = as_matrix(m)
    if m.shape[1] != len(s):
        raise DimensionError(f"matrix has {m.shape[1]} columns, stats have {len(s)}")
    return m


def apply_zscore(m, s: NormStats) -> np.ndarray:
    m = _check_stats(m, s)
    return (m - s.mean) / s.std


def invert_zscore(m, s: NormStats) -> np.ndarray:
    m = _check_stats(m, s)
    return m * s.std + s.mean


class ZScoreScaler(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Column-wise standardization with train-set statistics.

    Uses the population standard deviation; constant columns get a
    scale of 1 so they map to zero instead of dividing by zero.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    scale_ : ndarray of shape (n_features,)
    """

    def fit(self, X, y=None):
        stats = fit_zscore(X)
        self.mean_, self.scale_ = stats.mean, stats.std
        self.n_features_in_ = len(stats)
        return self

    @property
    def stats_(self) -> NormStats:
        check_is_fitted(self, "mean_")
        return NormStats(self.mean_, self.scale_)

    def transform(self, X):
        return apply_zscore(X, self.stats_)

    def inverse_transform(self, X):
        return invert_zscore(X, self.stats_)


def select_roi(d: Dataset, roi: RoiMask | str) -> Dataset:
    """Restrict the dataset inputs to the columns of one ROI.

    Targets, labels and prototypes are left untouched.
    """
    if isinstance(roi, str):
        roi = d.roi(roi)
    problems = roi.problems(d.train_x.shape[1])
    if problems:
        raise DecodingError("; ".join(problems))
    idx = roi.array
    return dataclasses.replace(d, train_x=d.train_x[:, idx], test_x=d.test_x[:, idx], rois=(roi,))


def compute_prototypes(targets, labels) -> PrototypeSet:
    targets = as_matrix(targets, "targets")
    labels = as_labels(labels)
    if len(labels) != targets.shape[0]:
        raise DimensionError(f"{len(labels)} labels for {targets.shape[0]} target rows")
    if len(labels) == 0:
        raise DecodingError("empty class set")
    classes, ids = encode_labels(labels)
    sums = np.zeros((len(classes), targets.shape[1]))
    np.add.at(sums, ids, targets)
    counts = np.bincount(ids, minlength=len(classes))
    return PrototypeSet(tuple(classes), sums / counts[:, None])
