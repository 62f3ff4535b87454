"""Fixed, adaptive and weighted-adaptive radius near neighbor regression
for WiFi fingerprint positioning, with kNN baselines and the benchmark
protocol around them (coverage-constrained tuning, error tables, sweeps).
"""

from .dataset import (
    CsvSchema,
    DataError,
    Fingerprint,
    FingerprintDataset,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
)
from .estimators import (
    ADAPTIVE_IDW,
    UNWEIGHTED,
    EstimateOutcome,
    EstimatorSpec,
    Family,
    RadiusModel,
    Weighting,
    arnn_estimate,
    frnn_estimate,
    idw,
    knn_estimate,
    method_catalog,
    train_radii,
    warnn_estimate,
)
from .evaluation import EvaluationReport, coverage_ratio, positioning_error, summarize
from .metrics import Metric, distance, positive_transform
from .neighbors import NeighborSet, adaptive_radius_query, knn_query, radius_query
from .tuning import InfeasibleError, SearchGrid, TunedMethod, sweep_tau, tune

__version__ = "0.1.0"
