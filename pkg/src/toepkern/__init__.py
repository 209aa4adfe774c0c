"""Block Toeplitz kernels on vector Hardy spaces.

Construction, classification and verification of nearly backward-shift
invariant subspaces realized as kernels of block Toeplitz operators.
"""
from .factor import (
    InnerCertificate,
    OuterReport,
    PreconditionError,
    bauer_factorize,
    divide_inner,
    garcia_inner,
    is_inner,
    outer_exp_log,
    shift_span,
)
from .hayashi import (
    ClassificationReport,
    ConstructionResult,
    EmbedResult,
    Pair,
    RigidityReport,
    classify_kernel,
    construct_kernel,
    embed_rect,
    hb_inner,
    pair_from_B,
    pair_identity_defect,
    rigidity_test,
    special_test,
    toeplitz_symbol,
)
from .nearly import (
    HerglotzData,
    SarasonReport,
    counterexample_UBU,
    dbr_kernel,
    divide_by_G,
    extract_W,
    is_nearly_invariant,
    model_space_basis,
    sarason_B,
    sarason_equivalence,
    verify_lemma31,
)
from .symbols import (
    DEFAULT_CONFIG,
    HardyElement,
    MatrixSymbol,
    ToleranceConfig,
    adjoint_flip,
    apply_symbol,
    cayley,
    grid_points,
    hardy_inner,
    herglotz,
    herglotz_taylor,
    matrix_pointwise,
    riesz_project,
    sample_symbol,
    series_inverse,
    symbol_from_samples,
    symbol_mul,
    symbols_allclose,
)
from .toeplitz import (
    BlockToeplitz,
    SubspaceBasis,
    basis_from_matrix,
    build_toeplitz,
    kernel_basis,
    operator_residual,
    orthonormal_basis,
    subspace_angle,
)

__all__ = [
    "BlockToeplitz",
    "ClassificationReport",
    "ConstructionResult",
    "DEFAULT_CONFIG",
    "EmbedResult",
    "HardyElement",
    "HerglotzData",
    "InnerCertificate",
    "MatrixSymbol",
    "OuterReport",
    "Pair",
    "PreconditionError",
    "RigidityReport",
    "SarasonReport",
    "SubspaceBasis",
    "ToleranceConfig",
    "adjoint_flip",
    "apply_symbol",
    "basis_from_matrix",
    "bauer_factorize",
    "build_toeplitz",
    "cayley",
    "classify_kernel",
    "construct_kernel",
    "counterexample_UBU",
    "dbr_kernel",
    "divide_by_G",
    "divide_inner",
    "embed_rect",
    "extract_W",
    "garcia_inner",
    "grid_points",
    "hardy_inner",
    "hb_inner",
    "herglotz",
    "herglotz_taylor",
    "is_inner",
    "is_nearly_invariant",
    "kernel_basis",
    "matrix_pointwise",
    "model_space_basis",
    "operator_residual",
    "orthonormal_basis",
    "outer_exp_log",
    "pair_from_B",
    "pair_identity_defect",
    "riesz_project",
    "rigidity_test",
    "sample_symbol",
    "sarason_B",
    "sarason_equivalence",
    "series_inverse",
    "shift_span",
    "special_test",
    "subspace_angle",
    "symbol_from_samples",
    "symbol_mul",
    "symbols_allclose",
    "toeplitz_symbol",
    "verify_lemma31",
]

__version__ = "0.1.0"
