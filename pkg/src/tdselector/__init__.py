"""Training-data selection for cross-project defect prediction.

Candidate training instances from other projects are scored by a weighted
blend of metric similarity and normalized defect count, the top-k per test
instance are pooled into a deduplicated training set, and a logistic
regression fitted on it predicts defect proneness, evaluated with AUC.
"""

__version__ = "0.1.0"

from tdselector.corpus import (
    ColumnMapping,
    CpdpSplit,
    Dataset,
    Instance,
    MetricSchema,
    build_m2o_split,
    load_dataset,
    zscore_normalize,
)
from tdselector.kernels import active_backend
from tdselector.learner import (
    LearnerParams,
    LogisticModel,
    Prediction,
    auc,
    predict_proba,
    train,
)
from tdselector.selector import (
    NormalizationMethod,
    SelectionResult,
    SelectorConfig,
    normalize_defect_count,
    optimize_alpha,
    score_pair,
    select_training_set,
    select_with_bug_threshold,
)
from tdselector.similarity import (
    SimilarityIndex,
    cosine,
    euclidean,
    manhattan,
    similarity_of,
)
from tdselector.stats import (
    cliffs_delta,
    effect_size_band,
    growth_rate,
    mean_std,
    pairwise_compare,
)

__all__ = [
    "__version__",
    "ColumnMapping", "CpdpSplit", "Dataset", "Instance", "MetricSchema",
    "build_m2o_split", "load_dataset", "zscore_normalize",
    "active_backend",
    "LearnerParams", "LogisticModel", "Prediction", "auc", "predict_proba",
    "train",
    "NormalizationMethod", "SelectionResult", "SelectorConfig",
    "normalize_defect_count", "optimize_alpha", "score_pair",
    "select_training_set", "select_with_bug_threshold",
    "SimilarityIndex", "cosine", "euclidean", "manhattan", "similarity_of",
    "cliffs_delta", "effect_size_band", "growth_rate", "mean_std",
    "pairwise_compare",
]
