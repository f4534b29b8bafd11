"""Few-query rejection sampling for strongly log-concave targets.

The library builds a dominating proposal for a univariate target known only
through a counting oracle, draws exact or TV-capped samples against it,
materializes the dyadic-block family on which any sampler must spend
queries to localize the target, and lifts the exact 1D step into a
Hit-and-Run chain for multivariate targets.
"""

from .envelope import (
    Envelope,
    build_envelope,
    envelope_value,
    find_threshold_index,
    prepare_envelope,
    sample_envelope,
    threshold_search_range,
)
from .errors import ClassViolationError, QuadratureError, UsageError
from .hardfamily import (
    HardFamily,
    build_member,
    distinct_response_count,
    identify,
    largest_m,
    member_mass_in_window,
    run_identification_experiment,
)
from .hitandrun import (
    ChainResult,
    ChainState,
    LineOracle,
    LineRestriction,
    MultivariateOracle,
    bracket_minimizer,
    build_line_envelope,
    quadratic_oracle,
    restrict,
    run_chain,
    step,
)
from .numerics import (
    QuadratureResult,
    adaptive_quadrature,
    gaussian_tail_integral,
    ks_statistic,
    tv_distance,
)
from .oracles import (
    OracleResponse,
    OracleTranscript,
    PiecewiseQuadraticPotential,
    PotentialOracle,
    evaluate_piecewise,
    normalize_at_zero,
    oracle_from_json,
    rescale_to_unit,
)
from .rejection import (
    FAILURE,
    SampleOutcome,
    acceptance_probability,
    capped_trials,
    sample_capped,
    sample_exact,
)

__version__ = "0.1.0"

__all__ = [
    "ChainResult",
    "ChainState",
    "ClassViolationError",
    "Envelope",
    "FAILURE",
    "HardFamily",
    "LineOracle",
    "LineRestriction",
    "MultivariateOracle",
    "OracleResponse",
    "OracleTranscript",
    "PiecewiseQuadraticPotential",
    "PotentialOracle",
    "QuadratureError",
    "QuadratureResult",
    "SampleOutcome",
    "UsageError",
    "acceptance_probability",
    "adaptive_quadrature",
    "bracket_minimizer",
    "build_envelope",
    "build_line_envelope",
    "build_member",
    "capped_trials",
    "distinct_response_count",
    "envelope_value",
    "evaluate_piecewise",
    "find_threshold_index",
    "gaussian_tail_integral",
    "identify",
    "ks_statistic",
    "largest_m",
    "member_mass_in_window",
    "normalize_at_zero",
    "oracle_from_json",
    "prepare_envelope",
    "quadratic_oracle",
    "rescale_to_unit",
    "restrict",
    "run_chain",
    "run_identification_experiment",
    "sample_capped",
    "sample_envelope",
    "sample_exact",
    "step",
    "threshold_search_range",
    "tv_distance",
]
