"""Well-posedness diagnostics for discretized operators between Gram-equipped spaces.

The package computes minimum and reduced minimum moduli (equivalently:
inf-sup constants and closed-range indicators) of dense operators A : V -> W'
where V and W carry SPD Gram matrices, checks the bijectivity/inf-sup/adjoint
equivalences on finite-dimensional instances, and applies the framework to a
space-time discretization of a 1D convection-diffusion problem.
"""

from .bnb import BnbVerdict, check_bnb, check_finite_dim_remark, solve_variational
from .expr import Coefficient, EvalError, ParseError, parse_coefficient
from .kato_examples import KikuchiInstance, build_kikuchi, kikuchi_blowup, kikuchi_family
from .linalg import (
    NoConvergence,
    NotPositiveDefinite,
    SvdResult,
    cholesky,
    default_rank_tol,
    numerical_rank,
    singular_values,
    svd,
    sym_eigen,
)
from .modulus import (
    AnnihilatorReport,
    ClosedRangeTrend,
    DiscreteOperator,
    ModulusReport,
    adjoint,
    annihilator_distance,
    annihilator_identities,
    closed_range_probe,
    minimum_modulus,
    modulus_report,
    quotient_distance,
    reduced_minimum_modulus,
    sup_pairing_over_range,
    whitened,
)
from .parabolic import (
    AssumptionViolated,
    EmptySpace,
    ParabolicAssembly,
    ParabolicProblem,
    ParabolicSolution,
    assemble_space_time,
    continuity_constant,
    estimate_trace_constant,
    infsup_constant,
    inverse_operator_bounds,
    problem_from_config,
    solve_parabolic,
    triple_norm,
    validate_assumptions,
)
from .spaces import (
    CsvFormatError,
    DimensionMismatch,
    DualVector,
    GramSpace,
    read_matrix_csv,
    whitener,
    write_matrix_csv,
)

__version__ = "0.1.0"
