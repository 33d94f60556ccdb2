"""Oblique matching pursuit: greedy subspace selection for separating a
signal component from a known background subspace."""

from .dictionaries import (
    Dictionary,
    GridSpec,
    SparseSignal,
    SplineSpec,
    background_family,
    bspline_dictionary,
    bspline_value,
    random_background_component,
    random_sparse_signal,
)
from .errors import (
    DependentAtomError,
    DimensionMismatchError,
    OblmpError,
    SingularGramError,
)
from .linalg import (
    OrthonormalSet,
    inner,
    mgs_orthonormalize,
    norm,
    orthogonal_project,
)
from .oblique import (
    BackgroundModel,
    DualSet,
    OracleProjection,
    apply_oblique,
    extend_duals,
    init_dual,
    oracle_duals,
    oracle_oblique_projection,
    subtract_background,
)
from .pursuit import (
    STOP_EXHAUSTED,
    STOP_MAX_ITERS,
    STOP_TOLERANCE,
    PursuitConfig,
    PursuitState,
    Selection,
    SeparationResult,
    oblmp,
    oomp,
    orthogonalize_candidates,
    select_next,
    update_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "BackgroundModel",
    "DependentAtomError",
    "Dictionary",
    "DimensionMismatchError",
    "DualSet",
    "GridSpec",
    "OblmpError",
    "OracleProjection",
    "OrthonormalSet",
    "PursuitConfig",
    "PursuitState",
    "Selection",
    "SeparationResult",
    "SingularGramError",
    "SparseSignal",
    "SplineSpec",
    "STOP_EXHAUSTED",
    "STOP_MAX_ITERS",
    "STOP_TOLERANCE",
    "apply_oblique",
    "background_family",
    "bspline_dictionary",
    "bspline_value",
    "extend_duals",
    "init_dual",
    "inner",
    "mgs_orthonormalize",
    "norm",
    "oblmp",
    "oomp",
    "oracle_duals",
    "oracle_oblique_projection",
    "orthogonal_project",
    "orthogonalize_candidates",
    "random_background_component",
    "random_sparse_signal",
    "select_next",
    "subtract_background",
    "update_coefficients",
]
