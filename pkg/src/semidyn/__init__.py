"""Semigroup dynamics of transcendental entire maps: affine commutators,
conjugate semigroups, normal forms, and escape-time grid classification."""

from .expr import (
    AffineExpr,
    AffineMap,
    Compose,
    Const,
    Cos,
    DegenerateAffineError,
    EvalOverflow,
    Exp,
    Expr,
    Identity,
    IndeterminateComparison,
    Negate,
    Power,
    Product,
    SamplePlan,
    Sin,
    Sum,
    affine_apply,
    affine_compose,
    affine_inverse,
    compose,
    compose_power,
    eval_at,
    eval_array,
    format_expr,
    is_transcendental,
    numerically_equal,
    parse_expr,
    sample_points,
)
from .commutator import (
    AffineGroup,
    ClosureOverflowError,
    CommutatorTable,
    NoAffineCommutatorError,
    NotNearlyRepresentableError,
    SemigroupPresentation,
    build_commutator_table,
    conjugate_semigroup,
    find_affine_commutator,
    group_closure,
    is_nearly_abelian,
    verify_identity,
)
from .words import (
    AmbiguousXiError,
    NormalForm,
    NoXiError,
    VerificationFailedError,
    Word,
    left_resolve_exists,
    normal_form,
    resolve_xi,
    word_eval,
)
from .grid import (
    ClassificationGrid,
    GridSpec,
    SpecMismatchError,
    WordBudgetExceededError,
    check_fatou_invariance,
    classify_map,
    classify_semigroup,
    compare_classifications,
    extract_julia_boundary,
    fatou_mask,
    heatmap_bytes,
    map_classification,
    status_bytes,
    write_csv,
    write_pgm,
)
from .fixtures import FIXTURES, INVOLUTION_FIXTURES, get_fixture

__version__ = "0.1.0"
