"""Numerical laboratory for finite-time Lyapunov exponent oscillation.

A concrete planar model (linear saddle chart plus quadratic fold returns
with exponentially oscillating return times) is assembled and every
quantitative step of the construction is verified at desk scale, ending
with finite-time Lyapunov exponents that oscillate between two distinct
closed-form limits on an open set of points and an open cone of vectors.
"""

from .cocycle import (
    CocycleCoeffs,
    ProductState,
    analytic_limits,
    check_coefficient_bounds,
    finite_time_le,
    initial_state,
    oscillation_report,
    product_step,
)
from .errors import (
    BoundViolationError,
    ConfigurationError,
    DomainError,
    FtleLabError,
    ModelInconsistencyError,
    PreconditionError,
    RangeOverflowError,
    SearchExhaustedError,
)
from .geometry import Rectangle, build_rectangle
from .henon import RenormParams, SaddleData, henon_iterate, renorm_apply, saddle_data
from .logscalar import SignedLogReal, slog
from .matrices import Jacobian2
from .modelmap import AnchorOrbit, FoldMap, LogPoint, Observable, SaddleChart
from .parameters import (
    FeasibilityReport,
    ParamGrid,
    Params,
    beta_prime_interval,
    calibrate,
    check_feasibility,
    compute_k0_xi,
    reference_params,
    scan_feasible,
    select_beta_prime,
)

__version__ = "0.1.0"
