"""smdiff: streaming sliding-mode differentiation.

Online estimation of the first n derivatives of a sampled, possibly noisy
signal with a filtering sliding-mode differentiator discretized by
eigenvalue matching, plus Euler-stepped baselines, pole-placement gain
synthesis, Lyapunov stability certification and a reproducible simulation
harness.
"""

from .analysis import (
    ErrorMetrics,
    LyapunovCertificate,
    TaylorRemainderBound,
    certify,
    convergence_bound_factor,
    error_metrics,
    neighborhood_check,
    pole_placement_residual,
    solve_discrete_lyapunov,
    taylor_remainder_bound,
)
from .differentiators import (
    DifferentiatorParams,
    Estimate,
    ExplicitRoots,
    FilterState,
    FromCharPoly,
    RepeatedRoot,
    init,
    resolve_roots,
    step_filtering_euler,
    step_matching,
    step_standard_euler,
)
from .errors import (
    ConfigError,
    ConvergenceFailure,
    DimensionMismatch,
    Diverged,
    InvalidOrder,
    InvalidQ,
    NoGroundTruth,
    NonFiniteState,
    NotConjugateClosed,
    SingularMatrix,
    SmdiffError,
    UnknownPreset,
    UnstableMatrix,
    UnstableRoot,
)
from .estimators import (
    FilteringEulerDifferentiator,
    MatchingFilteringDifferentiator,
    StandardEulerDifferentiator,
)
from .harness import RunConfig, StepRecord, preset, run, write_trace
from .poly import (
    RealPolynomial,
    char_poly_from_gains,
    check_conjugate_closed,
    coeffs_from_roots,
    eval_at_matrix,
    find_roots,
)
from .signals import (
    HARMONIC_MIX,
    GaussianNoise,
    NoNoise,
    PolynomialSignal,
    RampCosine,
    SinusoidMix,
    SinusoidNoise,
    SumNoise,
    truth,
)
from .synthesis import (
    GainCache,
    TransitionMatrix,
    closed_loop,
    closed_loop_eigenvalues,
    injection_gains,
    injection_gains_at,
    matched_poles,
    observability_matrix,
    precompute,
    solve_observability,
    transition_matrix,
)

__version__ = "0.1.0"
