"""Adaptive batch-mode active learning for anomaly detection on unbalanced data."""

from .classifier import (
    CalibratedClassifier,
    KernelParams,
    PlattParams,
    SvmModel,
    decision_value,
    predict_proba,
    train,
)
from .cluster import ClusteringResult, kmeans, kmeanspp_seed, kmedoids, nearest_to_centers
from .data import (
    Dataset,
    SplitResult,
    SyntheticSpec,
    init_labeled,
    load_csv,
    make_synthetic,
    standardize,
    stratified_split,
)
from .metrics import AggregateCurve, MetricsRecord, aggregate, discovery_count, prauc
from .mixture import GmmFitConfig, GmmModel, bic, fit_em, log_density, score_samples, select_k
from .strategies import (
    BalancingParams,
    BatchAllocation,
    QueryBatch,
    balance,
    entropy,
    sample_adaptive,
    sample_informative,
    sample_kmedoids,
    sample_max_entropy,
    sample_random,
    sample_representative,
)

__version__ = "0.1.0"
