"""Complex classical trajectories for post-selected quantum tunneling.

Closed-form complex solutions of the quartic and cubic escape problems,
Lambert-W seeded boundary-value solves, action/probability exponents,
weak-measurement pointer biases, and an independent split-operator quantum
oracle.
"""

from .bvp import INFINITY, BoundaryData, SolveReport, seed_epsilon, solve_tunneling
from .dynamics import (CUBIC, QUARTIC, Potential, PotentialKind, Trajectory,
                       TrajectoryParams, energy_of_m, exact_solution, exact_state)
from .observables import (ActionExponent, ImagExcursion, PointerBias, PointerConfig,
                          action_along_contour, action_exponent_real_time,
                          branch_suppression_compare, imag_excursion, pointer_bias)
from .specfun import EllipticContext, elliptic_K, jacobi_sn, lambert_w

__version__ = "0.1.0"

__all__ = [
    "INFINITY", "BoundaryData", "SolveReport", "seed_epsilon", "solve_tunneling",
    "CUBIC", "QUARTIC", "Potential", "PotentialKind", "Trajectory", "TrajectoryParams",
    "energy_of_m", "exact_solution", "exact_state",
    "ActionExponent", "ImagExcursion", "PointerBias", "PointerConfig",
    "action_along_contour", "action_exponent_real_time", "branch_suppression_compare",
    "imag_excursion", "pointer_bias",
    "EllipticContext", "elliptic_K", "jacobi_sn", "lambert_w",
    "__version__",
]
