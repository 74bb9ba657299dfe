"""Computable uniform convexity of L^p over finite atomic measure spaces."""

__version__ = "0.1.0"

from .alpha_solver import (
    AlphaCertificate,
    ConvexityBudget,
    alpha_table,
    budget_table,
    compute_alpha,
    delta_lemma1,
    delta_lemma2,
    delta_theorem,
    replay_chain,
)
from .exceptions import (
    DomainError,
    LpConvError,
    NumericError,
    PreconditionError,
    SingularityError,
    StructuralError,
)
from .measure_space import (
    InducedMeasure,
    LpFunction,
    MeasureSpace,
    disjoint_split_check,
    holder_gap,
    induce_probability,
    lp_norm,
    norming_witness,
    pairing,
    phase_reduction,
    quotient_z,
)
from .scalar_core import (
    Exponents,
    comparison_ratio,
    conjugate_exponent,
    normalized_gap,
    young_equality_holds,
    young_gap,
)
from .search_engine import SearchOptions, grid_refine, maximize, random_instance
from .slice_geometry import (
    SliceSpec,
    VerificationReport,
    adversarial_verify,
    modulus_of_convexity,
    slice_contains,
    slice_diameter,
    split_trick,
    verify_lemma1_instance,
    verify_lemma2_instance,
    verify_theorem_instance,
)
