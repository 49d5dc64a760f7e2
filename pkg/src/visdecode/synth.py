"""Seeded synthetic datasets with a planted target-to-input encoding.

Targets live in a class-structured feature space; inputs ("voxels") are
generated *from* the targets, so the decoding pipeline has to learn the
inverse direction, as with real brain activity.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FULL_ROI, Dataset, DecodingError, RoiMask


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_classes: int = 5
    train_per_class: int = 10
    test_per_class: int = 2
    n_inputs: int = 20
    n_targets: int = 10
    mapping: str = "linear"
    noise_sigma: float = 0.0
    class_separation: float = 1.0
    jitter: float = 0.1  # within-class spread, relative to class_separation

    def __post_init__(self):
        if self.n_classes < 2:
            raise DecodingError("n_classes must be >= 2")
        if self.n_inputs < 1 or self.n_targets < 1:
            raise DecodingError("n_inputs and n_targets must be >= 1")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise DecodingError("need at least one train and one test sample per class")
        if self.mapping not in ("linear", "quadratic"):
            raise DecodingError(f"unknown mapping {self.mapping!r}")
        if self.mapping == "linear" and self.n_inputs < self.n_targets:
            raise DecodingError(
                f"linear mapping needs n_inputs >= n_targets ({self.n_inputs} < {self.n_targets})"
            )
        if self.noise_sigma < 0 or self.class_separation < 0 or self.jitter < 0:
            raise DecodingError("noise_sigma, class_separation and jitter must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise DecodingError(f"unknown synth spec field(s): {unknown}")
        return cls(**d)


@dataclass(frozen=True)
class GroundTruth:
    spec: SynthSpec
    classes: tuple
    centers: np.ndarray  # (K, L)
    mixing: Optional[np.ndarray]  # (D, L); None for noise-only data
    quadratic: Optional[np.ndarray]  # (D, L) weights on squared targets
    train_ids: np.ndarray
    test_ids: np.ndarray


def _class_names(k):
    width = len(str(k - 1))
    return tuple(f"c{i:0{width}d}" for i in range(k))


def _targets(rng, k, L, train_per_class, test_per_class, separation=1.0, jitter=0.1):
    centers = separation * rng.standard_normal((k, L))
    spread = jitter * separation
    train_ids = np.repeat(np.arange(k), train_per_class)
    test_ids = np.repeat(np.arange(k), test_per_class)
    train_y = centers[train_ids] + spread * rng.standard_normal((train_ids.size, L))
    test_y = centers[test_ids] + spread * rng.standard_normal((test_ids.size, L))
    return centers, train_ids, test_ids, train_y, test_y


def _sub_masks(rng, n_inputs):
    size = max(1, n_inputs // 2)
    masks = [RoiMask.full(n_inputs, FULL_ROI)]
    for name in ("sub1", "sub2"):
        masks.append(RoiMask(name, tuple(sorted(rng.choice(n_inputs, size, replace=False)))))
    return tuple(masks)


def gen_dataset(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    """Draw a dataset whose inputs encode the targets through a planted map.

    ``x = A y (+ C y**2) + noise`` with ``A`` a random D x L matrix (full
    rank with probability one). The returned ROIs are the full column set
    plus two random half-size sub-masks.
    """
    rng = np.random.default_rng(spec.seed)
    centers, train_ids, test_ids, train_y, test_y = _targets(
        rng, spec.n_classes, spec.n_targets, spec.train_per_class, spec.test_per_class,
        spec.class_separation, spec.jitter,
    )
    D, L = spec.n_inputs, spec.n_targets
    A = rng.standard_normal((D, L)) / np.sqrt(L)
    C = rng.standard_normal((D, L)) / np.sqrt(L) if spec.mapping == "quadratic" else None

    def encode(y):
        x = y @ A.T
        if C is not None:
            x = x + (y * y) @ C.T
        return x + spec.noise_sigma * rng.standard_normal(x.shape)

    train_x, test_x = encode(train_y), encode(test_y)
    classes = _class_names(spec.n_classes)
    names = np.asarray(classes, dtype=object)
    d = Dataset(
        train_x=train_x,
        train_y=train_y,
        train_labels=names[train_ids],
        test_x=test_x,
        test_labels=names[test_ids],
        test_y=test_y,
        rois=_sub_masks(rng, D),
    )
    return d, GroundTruth(spec, classes, centers, A, C, train_ids, test_ids)


def gen_noise_only(seed=0, n_classes=50, train_per_class=10, test_per_class=10,
                   n_inputs=50, n_targets=20) -> Dataset:
    """Dataset whose inputs are standard normal noise, independent of targets and labels.

    Targets keep their class structure so the prototypes are distinct;
    any decoder should sit at the 0.5 chance level.
    """
    if n_classes < 2:
        raise DecodingError("n_classes must be >= 2")
    rng = np.random.default_rng(seed)
    _, train_ids, test_ids, train_y, test_y = _targets(
        rng, n_classes, n_targets, train_per_class, test_per_class
    )
    names = np.asarray(_class_names(n_classes), dtype=object)
    return Dataset(
        train_x=rng.standard_normal((train_ids.size, n_inputs)),
        train_y=train_y,
        train_labels=names[train_ids],
        test_x=rng.standard_normal((test_ids.size, n_inputs)),
        test_labels=names[test_ids],
        test_y=test_y,
        rois=_sub_masks(rng, n_inputs),
    )
