"""Decoding generic visual feature representations from brain activity.

Regress deep visual features from voxel vectors, identify the seen or
imagined class by similarity to class prototypes, and report pairwise
decoding accuracy per region, model and similarity metric.
"""

from .core import (
    Dataset,
    DecodingError,
    ExperimentConfig,
    NormStats,
    PrototypeSet,
    RegressorSpec,
    ResultRecord,
    ResultsTable,
    RoiMask,
    ValidationReport,
    validate_dataset,
)
from .evaluation import (
    PairwiseAccuracy,
    VisualDecoder,
    identify,
    pairwise_accuracy,
    resolve_prototypes,
    run_experiment,
)
from .preprocess import (
    ZScoreScaler,
    apply_zscore,
    compute_prototypes,
    fit_zscore,
    invert_zscore,
    select_roi,
)
from .regressors import (
    KNNRegressor,
    LinearRegression,
    MLPRegressor,
    PolyKernelRidge,
    Ridge,
    make_regressor,
)
from .similarity import cosine_sim, euclidean_sim, pearson_sim, similarity_matrix
from .synth import GroundTruth, SynthSpec, gen_dataset, gen_noise_only

__version__ = "0.1.0"
