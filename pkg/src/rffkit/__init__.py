"""Random Fourier features with leverage-weighted sampling.

Kernel approximation via plain, exact leverage-weighted, and fast
approximate leverage-weighted random features, together with ridge and
Lipschitz-loss learners, diagnostics, and an experiment harness.
"""

from .data import Dataset, SplineSimConfig, Task, generate_spline_sim, make_folds, parse_sparse_dataset, standardize, write_sparse_dataset
from .diagnostics import DecayModel, DecayReport, FeatureCountRule, decay_report, fixed_point_bound, required_features, whitened_error_norm
from .errors import DataFormatError, DimensionMismatchError, NumericalError
from .estimators import (
    KRRModel,
    LinearModel,
    LossKind,
    decision_function,
    fit_krr_exact,
    fit_lipschitz,
    fit_ridge,
    function_approx_error,
    orthogonality_check,
    predict,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    LambdaRule,
    ResultRow,
    SRule,
    emit_csv,
    fit_loglog_slope,
    parse_csv,
    run_pipeline,
    run_benchmark,
    run_convergence,
    run_diagnose,
)
from .features import (
    FeatureMatrix,
    LeverageProfile,
    SamplingScheme,
    WeightedFeatureSet,
    approx_leverage_sample,
    approx_gram,
    build_feature_matrix,
    effective_dof,
    exact_leverage_scores,
    sample_exact_leverage,
    sample_plain,
)
from .kernels import (
    FeatureStyle,
    KernelFamily,
    KernelSpec,
    cross_kernel,
    eval_kernel,
    feature_matrix,
    feature_value,
    gaussian_kernel,
    gram_eigvals,
    gram_matrix,
    spectral_sample,
    spline_kernel,
)

__version__ = "0.1.0"
