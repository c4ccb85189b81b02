"""Regularized ERM on random Nystrom subspaces for Lipschitz losses."""

from .data import Dataset, load_libsvm, parse_libsvm, split
from .diagnostics import (
    SpectrumReport,
    effective_dim_2,
    effective_dim_inf,
    exponential_dim_bound,
    fit_eigendecay,
    polynomial_dim_bound,
    projection_residual,
    suggest_subspace_size,
)
from .errors import (
    InsufficientDataError,
    InvalidInputError,
    NumericalDivergenceError,
    NumericalDomainError,
    ParseError,
)
from .kernel import KernelSpec, eval_kernel, gram
from .nystrom import NystromMap, embed, fit_embedding
from .sampling import (
    LandmarkSet,
    LeverageScores,
    als_landmarks,
    approximate_leverage_scores,
    exact_leverage_scores,
    uniform_landmarks,
)
from .solver import (
    LossSpec,
    TrainedModel,
    classification_error,
    loss_subgradient,
    loss_value,
    predict,
    train_constrained,
    train_penalized,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"
