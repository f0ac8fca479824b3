"""Subspace clustering by direct group-sparse matrix factorization.

The data matrix is factorized into k dictionary blocks with group-sparse
codes, so clusters fall out of the factorization itself: no affinity matrix,
no spectral step, and time/space linear in the number of samples.  Includes
mini-batch and landmark fitting for large data, sparse-noise and missing-data
variants, a synthetic union-of-subspaces benchmark, clustering metrics, and
scikit-learn compatible estimators.
"""

from .exceptions import (
    AmbiguousSupportError,
    DegenerateBlockWarning,
    EmptyClusterError,
    EmptyColumnObservationError,
    HeaderMismatchError,
    InvalidConfigError,
    InvalidParamsError,
    KFSCError,
    LengthMismatchError,
    NeedTwoBlocksError,
    ParseError,
    ShapeMismatchError,
    ZeroColumnError,
)
from .types import (
    Coefficients,
    DataMatrix,
    Dictionary,
    FitResult,
    HyperParams,
    SolverState,
)
from .ops import (
    assign_by_residual,
    assign_by_support,
    estimate_lambda,
    group_soft_threshold,
    normalize_columns,
    objective,
    project_unit_columns,
    ridge_codes,
    spectral_norm,
)
from .initialization import (
    init_dictionary_kmeans,
    init_dictionary_random,
    spherical_kmeans,
)
from .solver import (
    fit,
    update_c_gauss_seidel,
    update_c_jacobi,
    update_d_pgd,
)
from .variants import (
    LandmarkParams,
    MiniBatchParams,
    RobustParams,
    fit_landmark,
    fit_minibatch,
    fit_missing,
    fit_robust_sparse,
)
from .synth import SynthConfig, generate
from .metrics import clustering_accuracy, kpc_fit, nmi
from .estimators import (
    KFSC,
    LandmarkKFSC,
    MiniBatchKFSC,
    MissingKFSC,
    RobustKFSC,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousSupportError",
    "Coefficients",
    "DataMatrix",
    "DegenerateBlockWarning",
    "Dictionary",
    "EmptyClusterError",
    "EmptyColumnObservationError",
    "FitResult",
    "HeaderMismatchError",
    "HyperParams",
    "InvalidConfigError",
    "InvalidParamsError",
    "KFSC",
    "KFSCError",
    "LandmarkKFSC",
    "LandmarkParams",
    "LengthMismatchError",
    "MiniBatchKFSC",
    "MiniBatchParams",
    "MissingKFSC",
    "NeedTwoBlocksError",
    "ParseError",
    "RobustKFSC",
    "RobustParams",
    "ShapeMismatchError",
    "SolverState",
    "SynthConfig",
    "ZeroColumnError",
    "assign_by_residual",
    "assign_by_support",
    "clustering_accuracy",
    "estimate_lambda",
    "fit",
    "fit_landmark",
    "fit_minibatch",
    "fit_missing",
    "fit_robust_sparse",
    "generate",
    "group_soft_threshold",
    "init_dictionary_kmeans",
    "init_dictionary_random",
    "kpc_fit",
    "nmi",
    "normalize_columns",
    "objective",
    "project_unit_columns",
    "ridge_codes",
    "spectral_norm",
    "spherical_kmeans",
    "update_c_gauss_seidel",
    "update_c_jacobi",
    "update_d_pgd",
]
