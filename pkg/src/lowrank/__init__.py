"""Low-rank matrix factorization models.

Plain and non-negative factorization, orthogonal tri-factorization for
co-clustering, masked completion with graph, side-information and
enforcement regularizers, and factorizations coupled to regression targets.
"""

from .basic_mf import FactorPair, fit_basic, grad_basic, objective_basic
from .completion import MaskedProblem, fit_completion, masked_grad, masked_objective, split_observed
from .config import FitResult, ModelConfig
from .errors import (
    DegenerateClusterError, DimensionError, DivergenceError, DomainError, LowRankError,
    NoDataError, ParseError, SolverError, SplitError, ValidationError,
)
from .matcore import GraphData, estimate_memory_mb, laplacian_from_adjacency
from .nmf import aux_value, fit_nmf, kkt_residual_nmf, nmf_step
from .onmf3 import TriFactor, fit_onmf3
from .regularizers import (
    EnforcementTarget, TwoSidedProblem, fit_enforced_mf, fit_laplacian_mf, fit_twosided,
)
from .supervised import (
    AttitudeProblem, SupervisedProblem, fit_attitude, fit_supervised, fit_two_stage, lasso_w,
)

__version__ = "0.1.0"

__all__ = [
    "AttitudeProblem", "DegenerateClusterError", "DimensionError", "DivergenceError",
    "DomainError", "EnforcementTarget", "FactorPair", "FitResult", "GraphData",
    "LowRankError", "MaskedProblem", "ModelConfig", "NoDataError", "ParseError",
    "SolverError", "SplitError", "SupervisedProblem", "TriFactor", "TwoSidedProblem",
    "ValidationError", "aux_value", "estimate_memory_mb", "fit_attitude", "fit_basic",
    "fit_completion", "fit_enforced_mf", "fit_laplacian_mf", "fit_nmf", "fit_onmf3",
    "fit_supervised", "fit_twosided", "fit_two_stage", "grad_basic", "kkt_residual_nmf",
    "laplacian_from_adjacency", "lasso_w", "masked_grad", "masked_objective", "nmf_step",
    "objective_basic", "split_observed",
]
