"""Shared data model: matrices, labels, ROI masks, datasets, prototypes and
experiment configuration records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

ROI_ORDER = ("V1", "V2", "V3", "V4", "LVC", "LOC", "FFA", "PPA", "HVC", "VC")
MODEL_KINDS = ("linear", "ridge", "knn", "kernel_ridge", "mlp", "mlp_dropout")
METRICS = ("euclidean", "cosine", "pearson")
FULL_ROI = "VC"


class DecodingError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(DecodingError, ValueError):
    pass


def as_matrix(a, name="matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float64 array with at least one row and column."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name}: expected 2-D array, got {m.ndim}-D")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name}: empty matrix of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name}: contains NaN or Inf")
    return m


def as_labels(labels) -> np.ndarray:
    """Labels are opaque string tokens."""
    return np.asarray([str(lab) for lab in labels], dtype=object)


def encode_labels(labels) -> tuple[list[str], np.ndarray]:
    """Map label tokens to dense ids, classes sorted lexicographically."""
    labels = as_labels(labels)
    classes = sorted(set(labels))
    lookup = {c: i for i, c in enumerate(classes)}
    return classes, np.array([lookup[lab] for lab in labels], dtype=np.intp)


@dataclass(frozen=True)
class RoiMask:
    name: str
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @classmethod
    def union(cls, name: str, masks: Sequence["RoiMask"]) -> "RoiMask":
        idx = sorted(set().union(*(m.indices for m in masks)))
        return cls(name, tuple(idx))

    @classmethod
    def full(cls, n_columns: int, name: str = FULL_ROI) -> "RoiMask":
        return cls(name, tuple(range(n_columns)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def problems(self, n_columns: int) -> list[str]:
        out = []
        if not self.indices:
            out.append(f"roi {self.name!r} is empty")
            return out
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            out.append(f"roi {self.name!r} indices not strictly increasing")
        if min(self.indices) < 0 or max(self.indices) >= n_columns:
            out.append(f"roi {self.name!r}: roi index out of range (D={n_columns})")
        return out


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __len__(self):
        return len(self.mean)


@dataclass(frozen=True)
class PrototypeSet:
    """Per-class mean target vectors; row ``k`` belongs to ``classes[k]``."""

    classes: tuple[str, ...]
    prototypes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        if len(set(self.classes)) != len(self.classes):
            raise DecodingError("prototype class ids must be unique")
        if self.prototypes.shape[0] != len(self.classes):
            raise DimensionError(
                f"{len(self.classes)} class ids for {self.prototypes.shape[0]} prototype rows"
            )

    def __len__(self):
        return len(self.classes)

    def index(self, labels) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.classes)}
        missing = sorted({lab for lab in as_labels(labels) if lab not in lookup})
        if missing:
            raise DecodingError(f"labels absent from prototype set: {missing[:5]}")
        return np.array([lookup[lab] for lab in as_labels(labels)], dtype=np.intp)


@dataclass(frozen=True)
class Dataset:
    train_x: np.ndarray
    train_y: np.ndarray
    train_labels: np.ndarray
    test_x: np.ndarray
    test_labels: np.ndarray
    test_y: Optional[np.ndarray] = None
    rois: tuple[RoiMask, ...] = ()
    prototypes: Optional[PrototypeSet] = None

    def roi(self, name: str) -> RoiMask:
        for mask in self.rois:
            if mask.name == name:
                return mask
        if name == FULL_ROI:
            return RoiMask.full(self.train_x.shape[1])
        raise DecodingError(f"unknown ROI {name!r}")

    @property
    def roi_names(self) -> list[str]:
        return [m.name for m in self.rois]


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"violation: {v}" for v in self.violations)


def _matrix_problems(m, name) -> list[str]:
    if m is None:
        return [f"{name} missing"]
    m = np.asarray(m)
    if m.ndim != 2:
        return [f"{name} is not a 2-D matrix"]
    out = []
    if m.shape[0] < 1 or m.shape[1] < 1:
        out.append(f"{name} has shape {m.shape}")
    if not np.issubdtype(m.dtype, np.number) or not np.all(np.isfinite(m)):
        out.append(f"{name} contains non-finite entries")
    return out


def validate_dataset(d: Dataset) -> ValidationReport:
    """Check every dataset invariant and collect the violations.

    Never raises; callers decide whether to abort.
    """
    v: list[str] = []
    for name in ("train_x", "train_y", "test_x"):
        v += _matrix_problems(getattr(d, name), name)
    if d.test_y is not None:
        v += _matrix_problems(d.test_y, "test_y")
    if v:
        return ValidationReport(v)

    n = d.train_x.shape[0]
    if d.train_y.shape[0] != n:
        v.append(f"train_y rows {d.train_y.shape[0]} != train_x rows {n}")
    if len(d.train_labels) != n:
        v.append(f"label length mismatch: train_labels {len(d.train_labels)} != {n} rows")
    if len(d.test_labels) != d.test_x.shape[0]:
        v.append(
            f"label length mismatch: test_labels {len(d.test_labels)} != {d.test_x.shape[0]} rows"
        )
    for name in ("train_labels", "test_labels"):
        if any(str(lab) == "" for lab in getattr(d, name)):
            v.append(f"{name} contains an empty label")
    if d.test_x.shape[1] != d.train_x.shape[1]:
        v.append(f"test_x cols {d.test_x.shape[1]} != train_x cols {d.train_x.shape[1]}")
    if d.test_y is not None:
        if d.test_y.shape[0] != d.test_x.shape[0]:
            v.append(f"test_y rows {d.test_y.shape[0]} != test_x rows {d.test_x.shape[0]}")
        if d.test_y.shape[1] != d.train_y.shape[1]:
            v.append(f"test_y cols {d.test_y.shape[1]} != train_y cols {d.train_y.shape[1]}")

    names = [m.name for m in d.rois]
    if len(set(names)) != len(names):
        v.append("duplicate roi names")
    for mask in d.rois:
        v += mask.problems(d.train_x.shape[1])

    if d.prototypes is not None:
        p = d.prototypes.prototypes
        v += _matrix_problems(p, "prototypes")
        if p.ndim == 2 and p.shape[1] != d.train_y.shape[1]:
            v.append(f"prototypes cols {p.shape[1]} != train_y cols {d.train_y.shape[1]}")
    return ValidationReport(v)


@dataclass(frozen=True)
class KernelParams:
    degree: int = 2
    coef: float = 10.0
    gamma: float | str = "auto"


@dataclass(frozen=True)
class MlpSettings:
    hidden_units: int = 300
    activation: str = "sigmoid"
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.001
    dropout_rate: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class RegressorSpec:
    """A model kind plus its hyperparameters.

    Build one through :meth:`default` to inherit the reference settings
    (k=5, ridge lambda=1, kernel ridge lambda=0.005 with a degree-2
    polynomial kernel and constant 10, a 300-unit sigmoid MLP trained for
    100 epochs with batch 128 and Adam at 0.001, 30% input dropout for
    ``mlp_dropout``).
    """

    kind: str
    name: str = ""
    k: int = 5
    lam: float = 1.0
    kernel: KernelParams = KernelParams()
    mlp: MlpSettings = MlpSettings()

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DecodingError(f"unknown model kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)
        if self.k < 1:
            raise DecodingError("k must be >= 1")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise DecodingError("lambda must be a finite value >= 0")
        if self.kind == "kernel_ridge" and self.lam <= 0:
            raise DecodingError("kernel_ridge requires lambda > 0")
        if not 0.0 <= self.mlp.dropout_rate < 1.0:
            raise DecodingError("dropout_rate must lie in [0, 1)")
        if self.mlp.activation != "sigmoid":
            raise DecodingError("only the sigmoid hidden activation is supported")

    @classmethod
    def default(cls, kind: str, **overrides) -> "RegressorSpec":
        lam = {"ridge": 1.0, "kernel_ridge": 0.005}.get(kind, 0.0)
        mlp = MlpSettings(dropout_rate=0.3 if kind == "mlp_dropout" else 0.0)
        base = dict(kind=kind, lam=lam, mlp=mlp)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    models: tuple[RegressorSpec, ...]
    metrics: tuple[str, ...] = ("pearson",)
    rois: tuple[str, ...] = ("all",)
    output: str = "results"
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise DecodingError(f"unknown metric(s) {bad}")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise DecodingError(f"model names must be unique, got {names}")

    def resolve_rois(self, d: Dataset) -> list[str]:
        """Expand ``"all"`` into every dataset mask plus the full visual cortex."""
        out: list[str] = []
        for name in self.rois:
            if name == "all":
                expanded = d.roi_names + ([] if FULL_ROI in d.roi_names else [FULL_ROI])
            else:
                d.roi(name)
                expanded = [name]
            out += [n for n in expanded if n not in out]
        return out


@dataclass(frozen=True)
class ResultRecord:
    roi: str
    model: str
    metric: str
    accuracy: float
    n_pairs: int
    wall_time: float = 0.0
    status: str = "ok"
    reason: str = ""

    @property
    def key(self):
        return (self.roi, self.model, self.metric)


@dataclass
class ResultsTable:
    records: list[ResultRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def sorted(self) -> list[ResultRecord]:
        return sorted(self.records, key=lambda r: r.key)

    def get(self, roi, model, metric) -> ResultRecord:
        for r in self.records:
            if r.key == (roi, model, metric):
                return r
        raise KeyError((roi, model, metric))
