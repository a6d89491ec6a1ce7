"""AumAI ForwardRDU: forward rank-dependent performance criteria."""

from aumai_forwardrdu.backward_solver import (
    BackwardSolution,
    ConcavifiedN,
    build_N,
    concave_envelope,
    merton_multiplier,
    optimal_terminal_wealth,
    solve_multiplier,
)
from aumai_forwardrdu.config import ScenarioConfig, load_scenario, parse_scenario
from aumai_forwardrdu.distortion import (
    DegenerateDistortion,
    Distortion,
    IdentityDistortion,
    PrelecDistortion,
    TabulatedDistortion,
    TverskyKahnemanDistortion,
    WangDistortion,
    WangForwardDistortion,
    check_degenerate,
    fit_wang_gamma,
    jin_zhou_monotone,
    wang_eval,
    wang_eval_integral,
)
from aumai_forwardrdu.errors import (
    ConfigError,
    DomainError,
    ForwardRDUError,
    InvariantViolationError,
    NoSolutionError,
    QuadratureError,
    SaturationError,
    UnsupportedPolicyError,
)
from aumai_forwardrdu.forward_utility import (
    forward_u,
    forward_u_prime,
    forward_u_prime_inverse,
    h_eval,
    h_inverse,
    v_closed_form,
    v_eval,
)
from aumai_forwardrdu.market import (
    accumulate_risk,
    distort_market,
    distorted_kernel,
    kernel_cdf,
    kernel_law,
    kernel_quantile,
)
from aumai_forwardrdu.models import (
    CheckResult,
    Classification,
    DiracAtom,
    DiracMixture,
    ForwardPair,
    KernelLaw,
    MarketCurve,
    MarketSegment,
    VerificationReport,
)
from aumai_forwardrdu.rdu_value import KernelProspect, rdu_value
from aumai_forwardrdu.simulate import PathSet, euler_wealth, simulate_optimal
from aumai_forwardrdu.utility import CRRAUtility, ForwardUtility, LogUtility
from aumai_forwardrdu.verify import (
    construct_dynamic,
    run_checks,
    verify_dynamic_consistency,
    verify_suboptimality,
    verify_value_preservation,
)

__version__ = "0.1.0"

__all__ = [
    # Market
    "MarketSegment",
    "MarketCurve",
    "KernelLaw",
    "accumulate_risk",
    "kernel_law",
    "kernel_cdf",
    "kernel_quantile",
    "distort_market",
    "distorted_kernel",
    # Distortions
    "Distortion",
    "IdentityDistortion",
    "WangDistortion",
    "WangForwardDistortion",
    "DegenerateDistortion",
    "PrelecDistortion",
    "TverskyKahnemanDistortion",
    "TabulatedDistortion",
    "Classification",
    "wang_eval",
    "wang_eval_integral",
    "check_degenerate",
    "fit_wang_gamma",
    "jin_zhou_monotone",
    # Forward utilities
    "DiracAtom",
    "DiracMixture",
    "ForwardPair",
    "h_eval",
    "h_inverse",
    "v_eval",
    "v_closed_form",
    "forward_u",
    "forward_u_prime",
    "forward_u_prime_inverse",
    "CRRAUtility",
    "LogUtility",
    "ForwardUtility",
    # RDU and the backward problem
    "KernelProspect",
    "rdu_value",
    "build_N",
    "concave_envelope",
    "ConcavifiedN",
    "optimal_terminal_wealth",
    "solve_multiplier",
    "merton_multiplier",
    "BackwardSolution",
    # Simulation and verification
    "PathSet",
    "simulate_optimal",
    "euler_wealth",
    "CheckResult",
    "VerificationReport",
    "verify_value_preservation",
    "verify_suboptimality",
    "construct_dynamic",
    "verify_dynamic_consistency",
    "run_checks",
    # Configuration
    "ScenarioConfig",
    "load_scenario",
    "parse_scenario",
    # Errors
    "ForwardRDUError",
    "DomainError",
    "QuadratureError",
    "NoSolutionError",
    "InvariantViolationError",
    "SaturationError",
    "UnsupportedPolicyError",
    "ConfigError",
]
