"""Distance-based validation of class labels.

Detects instances that look like outliers relative to the other members of
their class, using only a pairwise (quasi-)distance matrix: per-class
empirical CDFs of within- and cross-class distances define a cut-off, each
member's count of close within-class neighbors is tested against an exact
binomial critical value, and the per-class error budget is split evenly so
the family-wise error stays controlled.  A Monte-Carlo harness reproduces
the procedure's operating characteristics on correlated-normal data.
"""

from .core import (
    ClassLabeling,
    ClassNotTestableError,
    CsvFormatError,
    DataMatrix,
    DegenerateInputError,
    DistanceMatrix,
    EstimationError,
    LabelCheckError,
    TestConfig,
    bonferroni_alpha,
    build_partitioned_view,
)
from .distance import (
    METRICS,
    build_distance_matrix,
    correlation_distance,
    euclidean_distance,
    manhattan_distance,
    pair_distance,
)
from .estimation import (
    ClassEstimates,
    EmpiricalCdf,
    per_instance_cdfs,
    pool_cdfs,
    psi_hat,
    solve_t_star,
)
from .metrics import (
    AggregateMetrics,
    ConfusionCounts,
    MetricSummary,
    RunMetrics,
    aggregate,
    score_run,
)
from .simulation import (
    IndependentStudyConfig,
    StudyConfig,
    StudyReport,
    generate_dataset,
    generate_independent_distances,
    run_independent_study,
    run_study,
)
from .testing import (
    ClassTestResult,
    ValidationResult,
    binomial_cdf,
    binomial_cdf_exact,
    critical_value,
    tau_star_bound,
    test_class,
    type2_error,
    validate_all,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateMetrics",
    "ClassEstimates",
    "ClassLabeling",
    "ClassNotTestableError",
    "ClassTestResult",
    "ConfusionCounts",
    "CsvFormatError",
    "DataMatrix",
    "DegenerateInputError",
    "DistanceMatrix",
    "EmpiricalCdf",
    "EstimationError",
    "IndependentStudyConfig",
    "LabelCheckError",
    "METRICS",
    "MetricSummary",
    "RunMetrics",
    "StudyConfig",
    "StudyReport",
    "TestConfig",
    "ValidationResult",
    "aggregate",
    "binomial_cdf",
    "binomial_cdf_exact",
    "bonferroni_alpha",
    "build_distance_matrix",
    "build_partitioned_view",
    "correlation_distance",
    "critical_value",
    "euclidean_distance",
    "generate_dataset",
    "generate_independent_distances",
    "manhattan_distance",
    "pair_distance",
    "per_instance_cdfs",
    "pool_cdfs",
    "psi_hat",
    "run_independent_study",
    "run_study",
    "score_run",
    "solve_t_star",
    "tau_star_bound",
    "test_class",
    "type2_error",
    "validate_all",
    "__version__",
]
