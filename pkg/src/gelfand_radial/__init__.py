"""Numerical toolkit for radial solutions of ``-Delta_g u = e^u`` on model manifolds."""

from .asymptotics import AsymptoticReport, LimitKind, classify_limit, decay_ratio, log_rate
from .emden import (
    PhaseState,
    SpectralSummary,
    barrier_LZ,
    char_roots,
    emden_transform,
    integrate_autonomous,
    phase_start,
)
from .errors import (
    BracketError,
    BracketFailure,
    ConfigError,
    DimensionError,
    DomainError,
    GelfandError,
    InsufficientRange,
    NonMonotoneWitness,
    NumericalError,
    PartialFailure,
    RangeMismatch,
    StepUnderflow,
    SupportError,
    TangencyWarning,
)
from .intersections import IntersectionReport, find_intersections
from .manifold import (
    ProfileKind,
    TailClass,
    WarpProfile,
    check_assumptions,
    classify_tail,
    euclidean,
    eval_profile,
    hyperbolic,
    log_derivative,
    make_spliced_profile,
    parse_profile,
    polyexp,
    psi_ratio_integral,
)
from .solver import (
    LinearizedSolution,
    RadialSolution,
    blowup_rescale,
    integrate_ivp,
    integrate_linearized,
    taylor_init,
)
from .stability import (
    StabilityVerdict,
    ball_eigenvalue,
    bottom_of_spectrum,
    first_zero,
    quadratic_form,
    stability_test,
    threshold_eta,
    weighted_ball_eigenvalue,
)

__version__ = "0.1.0"
