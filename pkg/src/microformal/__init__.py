"""Exact engine for microformal morphisms acting on oscillatory wave functions.

Everything is computed in exact arithmetic over Gaussian rationals, inside a
ring truncated in the coupling grade and in Planck's constant.  The quantum
pullback is a formal differential operator applied by amplitude transport;
the classical pullback solves the critical-point system by fixed-point
iteration; verification pits the two against each other.
"""

from .errors import (
    CompositionError,
    ConsistencyError,
    ContextError,
    DegreeGuardError,
    DimensionError,
    GradingError,
    MatrixError,
    MicroformalError,
    ParseError,
    TruncationError,
    ValuationError,
)
from .exactring import Context, GaussRat, I, Poly, coords
from .biseries import BiSeries, Truncation, identity_values, poly_eval, series_eval
from .genfun import (
    ClassicalGenFun,
    GenFun,
    classical_pullback,
    gateaux_derivative,
    identity_genfun,
)
from .quantum import (
    MorphismOperator,
    PulledBack,
    WaveFunction,
    WaveTerm,
    apply_higher_operator,
    apply_operator,
    compose,
    compose_operators,
    exponent_extract,
    linear_change,
    matrix_inverse,
    quantum_pullback,
    wave_from_exponent,
)
from .verify import (
    InstanceGen,
    Sizes,
    Verdict,
    check_classical_limit,
    check_composition_coherence,
    check_derivative_homomorphism,
    default_truncation,
    first_discrepancy,
    run_all_checks,
)
from .parsing import eval_constant, eval_poly, eval_series, parse_expression

__all__ = [
    "BiSeries", "ClassicalGenFun", "CompositionError", "ConsistencyError",
    "Context", "ContextError", "DegreeGuardError", "DimensionError",
    "GaussRat", "GenFun", "GradingError", "I", "InstanceGen", "MatrixError",
    "MicroformalError", "MorphismOperator", "ParseError", "Poly",
    "PulledBack", "Sizes", "Truncation", "TruncationError", "ValuationError",
    "Verdict", "WaveFunction", "WaveTerm", "apply_higher_operator",
    "apply_operator", "check_classical_limit", "check_composition_coherence",
    "check_derivative_homomorphism", "classical_pullback", "compose",
    "compose_operators", "coords", "default_truncation", "eval_constant",
    "eval_poly", "eval_series", "exponent_extract", "first_discrepancy",
    "gateaux_derivative", "identity_genfun", "identity_values",
    "linear_change", "matrix_inverse", "parse_expression", "poly_eval",
    "quantum_pullback", "run_all_checks", "series_eval", "wave_from_exponent",
]

__version__ = "0.1.0"
