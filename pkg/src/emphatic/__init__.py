"""Exact and sampled analysis of emphatic TD for off-policy evaluation in finite MDPs."""

from .emphasis import (
    EmphasisBundle,
    beta,
    emphasis_bundle,
    emphasis_vector,
    followon_vector,
    kappa,
    plambda,
)
from .fixtures import (
    fixture_divergence,
    fixture_random,
    fixture_two_state,
    property_family,
    two_state_closed_form,
)
from .learners import (
    Etd0State,
    EtdLambdaState,
    LearningConfig,
    StepSchedule,
    Td0State,
    Trajectory,
    Transition,
    etd0_step,
    etd_lambda_step,
    run_learning,
    simulate,
    td0_step,
)
from .mdp import (
    CoverageError,
    InducedChain,
    NonErgodicChainError,
    Policy,
    TabularMdp,
    ValidationError,
    importance_ratios,
    induced_chain,
    stationary_distribution,
    true_value,
)
from .operators import (
    AffineOperator,
    ContractionReport,
    ErrorBoundReport,
    WeightedProjector,
    bellman_apply,
    bellman_lambda_apply,
    bellman_lambda_operator,
    bellman_operator,
    check_error_bound,
    contraction_modulus,
    jensen_step_check,
    make_projector,
    proof_inequality_check,
    solve_projected_fixed_point,
    theorem1_report,
    theorem2_report,
    weighted_norm,
)
from .spec_io import Instance, SpecError, canonical_json, parse_spec, write_spec

__version__ = "0.1.0"
