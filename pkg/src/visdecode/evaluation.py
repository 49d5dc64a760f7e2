"""Prototype identification, pairwise decoding accuracy and the experiment sweep."""

from __future__ import annotations

import logging
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .core import (
    Dataset,
    DecodingError,
    ExperimentConfig,
    PrototypeSet,
    RegressorSpec,
    ResultRecord,
    ResultsTable,
    as_labels,
    validate_dataset,
)
from .preprocess import ZScoreScaler, compute_prototypes, select_roi
from .regressors import Ridge, make_regressor
from .similarity import UndefinedSimilarity, get_similarity, similarity_matrix

log = logging.getLogger(__name__)


@dataclass
class IdentificationResult:
    predicted: str
    similarities: np.ndarray  # one entry per prototype class, NaN where skipped
    classes: tuple
    true_class: Optional[str] = None
    tied: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def correct(self) -> Optional[bool]:
        return None if self.true_class is None else self.predicted == self.true_class


@dataclass(frozen=True)
class PairwiseAccuracy:
    accuracy: float
    n_pairs: int
    wins: int
    ties: int
    losses: int
    undefined: int = 0  # pairs scored as ties because a similarity was undefined


def identify(y_r, protos: PrototypeSet, metric: str, true_class=None) -> IdentificationResult:
    """Pick the prototype class most similar to the predicted feature vector.

    Candidates on which the metric is undefined are skipped. Ties go to
    the smallest class id and are listed in ``tied``.
    """
    if len(protos) < 2:
        raise DecodingError("identification needs at least 2 candidate classes")
    sim = get_similarity(metric)
    scores = np.full(len(protos), np.nan)
    skipped = []
    for k, (cls, proto) in enumerate(zip(protos.classes, protos.prototypes)):
        try:
            scores[k] = sim(y_r, proto)
        except UndefinedSimilarity as exc:
            skipped.append(cls)
            log.debug("skipping class %s: %s", cls, exc)
    if len(skipped) == len(protos):
        raise DecodingError(f"{metric} similarity undefined for every candidate class")
    best = np.nanmax(scores)
    tied = sorted(c for c, s in zip(protos.classes, scores) if s == best)
    return IdentificationResult(
        predicted=tied[0],
        similarities=scores,
        classes=protos.classes,
        true_class=None if true_class is None else str(true_class),
        tied=tied if len(tied) > 1 else [],
        skipped=skipped,
    )


def pairwise_accuracy(preds, labels, protos: PrototypeSet, metric: str) -> PairwiseAccuracy:
    """Mean binary accuracy of the true class against every other candidate.

    For each prediction and each wrong class ``k``, the pair is won when the
    true prototype is strictly more similar than prototype ``k`` and counts
    half when they are equal (or when either similarity is undefined).
    Chance level is 0.5.
    """
    preds = np.atleast_2d(np.asarray(preds, dtype=np.float64))
    labels = as_labels(labels)
    if len(labels) != preds.shape[0]:
        raise DecodingError(f"{len(labels)} labels for {preds.shape[0]} predictions")
    if len(protos) < 2:
        raise DecodingError("pairwise accuracy needs at least 2 classes")
    true_idx = protos.index(labels)
    S = similarity_matrix(preds, protos.prototypes, metric)
    m, k = S.shape
    s_true = S[np.arange(m), true_idx][:, None]
    others = np.ones_like(S, dtype=bool)
    others[np.arange(m), true_idx] = False

    undefined = (np.isnan(S) | np.isnan(s_true)) & others
    wins = int(np.sum((s_true > S) & others & ~undefined))
    losses = int(np.sum((s_true < S) & others & ~undefined))
    n_pairs = m * (k - 1)
    ties = n_pairs - wins - losses
    acc = (wins + 0.5 * ties) / n_pairs if n_pairs else float("nan")
    return PairwiseAccuracy(acc, n_pairs, wins, ties, losses, int(undefined.sum()))


class VisualDecoder(BaseEstimator):
    """Regress visual features from brain activity in z-scored space.

    Inputs and targets are standardized with training statistics, the
    wrapped regressor is fit on the standardized data, and predictions are
    mapped back to the original target space so they can be compared with
    prototypes.

    Parameters
    ----------
    regressor : estimator
        Any multi-output regressor with ``fit``/``predict``; cloned on fit.
    """

    def __init__(self, regressor=None):
        self.regressor = regressor

    def fit(self, X, Y):
        self.x_scaler_ = ZScoreScaler().fit(X)
        self.y_scaler_ = ZScoreScaler().fit(Y)
        base = Ridge() if self.regressor is None else self.regressor
        self.regressor_ = clone(base).fit(self.x_scaler_.transform(X), self.y_scaler_.transform(Y))
        self.n_features_in_ = self.x_scaler_.n_features_in_
        return self

    def predict(self, X):
        check_is_fitted(self, "regressor_")
        out = self.regressor_.predict(self.x_scaler_.transform(X))
        return self.y_scaler_.inverse_transform(out)

    def identify(self, X, protos: PrototypeSet, metric="pearson") -> list[str]:
        return [identify(y, protos, metric).predicted for y in self.predict(X)]

    def score(self, X, labels, protos: PrototypeSet, metric="pearson") -> float:
        return pairwise_accuracy(self.predict(X), labels, protos, metric).accuracy


def resolve_prototypes(d: Dataset) -> tuple[PrototypeSet, str]:
    """Prototype set for evaluating ``d`` and a tag naming where it came from.

    Preference: an explicit prototype file, then training targets when they
    cover every test class, then test targets grouped by test label.
    """
    if d.prototypes is not None:
        return d.prototypes, "file"
    if set(as_labels(d.test_labels)) <= set(as_labels(d.train_labels)):
        return compute_prototypes(d.train_y, d.train_labels), "train_targets"
    if d.test_y is not None:
        return compute_prototypes(d.test_y, d.test_labels), "test_targets"
    raise DecodingError(
        "test classes are absent from training labels and no prototypes or test targets exist"
    )


def cell_seed(global_seed: int, roi: str, model: str, model_seed: int = 0) -> int:
    """Stable per-cell seed, independent of execution order."""
    key = [int(global_seed), int(model_seed), zlib.crc32(roi.encode()), zlib.crc32(model.encode())]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _run_cell(d: Dataset, roi: str, spec: RegressorSpec, metrics, protos, seed):
    start = time.perf_counter()
    info = {"roi": roi, "model": spec.name, "kind": spec.kind, "seed": seed}
    try:
        sub = select_roi(d, roi)
        info["n_features"] = sub.train_x.shape[1]
        decoder = VisualDecoder(make_regressor(spec, seed)).fit(sub.train_x, sub.train_y)
        if hasattr(decoder.regressor_, "gamma_"):
            info["gamma"] = decoder.regressor_.gamma_
        preds = decoder.predict(sub.test_x)
    except Exception as exc:  # noqa: BLE001 -- isolate failing cells
        log.warning("cell %s/%s failed: %s", roi, spec.name, exc)
        reason = f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        info["error"] = reason
        return [
            ResultRecord(roi, spec.name, m, float("nan"), 0, elapsed, "failed", reason)
            for m in metrics
        ], info

    records = []
    fit_time = time.perf_counter() - start
    for metric in metrics:
        t0 = time.perf_counter()
        try:
            pa = pairwise_accuracy(preds, sub.test_labels, protos, metric)
            rec = ResultRecord(roi, spec.name, metric, pa.accuracy, pa.n_pairs,
                               fit_time + time.perf_counter() - t0)
        except Exception as exc:  # noqa: BLE001
            rec = ResultRecord(roi, spec.name, metric, float("nan"), 0,
                               fit_time + time.perf_counter() - t0, "failed",
                               f"{type(exc).__name__}: {exc}")
        records.append(rec)
    return records, info


def run_experiment(cfg: ExperimentConfig, d: Dataset, n_jobs: Optional[int] = None) -> ResultsTable:
    """Evaluate every (ROI, model, metric) cell of the configured sweep.

    Cells run concurrently when ``n_jobs > 1``; each cell draws its random
    stream from the global seed plus its ROI and model names, so the numbers
    do not depend on scheduling. A failing cell is recorded with
    ``status="failed"`` and does not stop the others.
    """
    report = validate_dataset(d)
    if not report.ok:
        raise DecodingError(f"invalid dataset: {'; '.join(report.violations)}")
    rois = cfg.resolve_rois(d)
    protos, source = resolve_prototypes(d)
    cells = [(roi, spec) for roi in rois for spec in cfg.models]
    n_jobs = cfg.n_jobs if n_jobs is None else n_jobs

    def work(cell):
        roi, spec = cell
        seed = cell_seed(cfg.seed, roi, spec.name, spec.mlp.seed)
        return _run_cell(d, roi, spec, cfg.metrics, protos, seed)

    if n_jobs and n_jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(work, cells))
    else:
        outcomes = [work(c) for c in cells]

    table = ResultsTable(metadata={
        "seed": cfg.seed,
        "metrics": list(cfg.metrics),
        "rois": rois,
        "prototype_source": source,
        "n_classes": len(protos),
        "n_test": int(d.test_x.shape[0]),
        "cells": [info for _, info in outcomes],
    })
    for records, _ in outcomes:
        table.records.extend(records)
    table.records = table.sorted()
    return table
