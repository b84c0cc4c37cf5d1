"""quadpencil: decide and certify rational solvability of a smooth pair of
quadratic forms in many variables."""

from .balls import (
    DEFAULT_POLICY,
    ComplexBall,
    PrecisionPolicy,
    RealBall,
    ball_kernel,
    ball_sign,
    precision,
    refine_root,
)
from .errors import (
    HypothesisError,
    OracleBudgetError,
    OracleExternalError,
    PrecisionExhaustedError,
    PreconditionError,
    QuadPencilError,
    RealInsolvableError,
)
from .instances import (
    InstanceFile,
    emit_certificate_text,
    emit_instance,
    generate_instance,
    parse_certificate_text,
    parse_instance,
    verify_certificate,
)
from .linalg import (
    Matrix,
    Rat,
    RatVec,
    Signature,
    as_matrix,
    as_vector,
    bilinear,
    block_diag,
    congruence,
    determinant,
    diag,
    evaluate_form,
    identity,
    inertia,
    kernel_vector,
    pencil_det_poly,
    pencil_member,
    sym_matrix,
)
from .oracle import (
    Oracle,
    OracleRequest,
    OracleResult,
    external_solve,
    isotropic_vector,
)
from .pencil import (
    HypothesisReport,
    PencilProfile,
    SolvabilityReport,
    check_hypothesis_h,
    find_balanced_lambda,
    find_definite_lambda,
    is_real_solvable,
    pencil_basepoint_shift,
    signature_profile,
    simplest_rational_between,
)
from .realsol import (
    BlockDiagPair,
    DiagonalPairView,
    RealPoint,
    lemma_positive_definite_exists,
    lemma_real_solvable,
    real_point,
    simultaneous_block_diag,
    solve_all_real,
    solve_mixed,
    solve_two_complex_blocks,
)
from .reduction import (
    base_witt,
    clear_first_row,
    double_witt,
    hyperbolic_chain,
    mordell3,
    reduce_qf,
    split_h,
)
from .roots import IsolatingInterval, cauchy_bound, isolate_real_roots, poly
from .solve import SolutionCertificate, pos_neg, rational_isotropic_near, solve_pair

__all__ = [name for name in dir() if not name.startswith("_")]
