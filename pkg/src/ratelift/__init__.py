"""Convergence-rate lifting for first-order methods.

Modules:

- :mod:`ratelift.problems` -- test instances with Hölder smoothness / growth
  descriptors and sampled verifiers.
- :mod:`ratelift.solvers` -- proximal point, Polyak subgradient, Hölder
  gradient descent and the gap-halving restart wrapper.
- :mod:`ratelift.rates` -- iteration-count formulas, lifting substitutions,
  restart sums and lower bounds.
- :mod:`ratelift.envelope` -- grid conjugates, convex envelopes and the
  auxiliary-function certifications.
- :mod:`ratelift.harness` -- experiment configs, observed-vs-predicted
  comparisons and artifacts.
"""

from .problems import (
    CertReport,
    GrowthDescriptor,
    ProblemInstance,
    SmoothnessDescriptor,
    UnsupportedInstanceError,
    make_piecewise_max,
    make_power_norm,
    problem_from_spec,
    verify_growth,
    verify_smoothness,
)
from .rates import RateBound, RateQuery, UnsupportedCellError
from .solvers import (
    RunResult,
    SolverConfig,
    holder_gradient_descent,
    polyak_subgradient,
    proximal_point,
    restart_fom,
)

__version__ = "0.1.0"

__all__ = [
    "CertReport",
    "GrowthDescriptor",
    "ProblemInstance",
    "SmoothnessDescriptor",
    "UnsupportedInstanceError",
    "make_piecewise_max",
    "make_power_norm",
    "problem_from_spec",
    "verify_growth",
    "verify_smoothness",
    "RateBound",
    "RateQuery",
    "UnsupportedCellError",
    "RunResult",
    "SolverConfig",
    "holder_gradient_descent",
    "polyak_subgradient",
    "proximal_point",
    "restart_fom",
]
