"""Action exponents, complex-time contours, pointer biases, excursion laws.

The probability exponent is the coefficient of the coupling scale in
ln |Psi|^2: twice the real part of the full exponent i S + b, where S is the
dimensionless action of the certified trajectory and b = -x_i^2/(4 L^2) is
the boundary term contributed by the initial Gaussian.  The divergence of S
at the escape pole has real coefficients through all divergent orders (it is
a pure phase), so the imaginary part converges as the cutoff approaches the
pole; a linear Richardson step in the cutoff removes the leading finite-size
remainder and the residual cutoff dependence is verified.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize_scalar

from .bvp import BoundaryData, SolveReport, solve_tunneling
from .dynamics import Potential, PotentialKind, Trajectory, TrajectoryParams, exact_state
from .errors import ContourError, DomainError, PreconditionError, RegularizationError
from .specfun import _lattice_coords

_DEFAULT_CUTOFF = 0.02
_CUTOFF_STABILITY = 1e-6
_POLE_CLEARANCE = 1e-2


@dataclass
class ActionExponent:
    """Exponent data of a tunneling solution, per unit coupling scale.

    prob_exponent: coefficient of the coupling scale in ln |Psi|^2
    (negative for suppressed tunneling).  phase: dynamical phase Re(S)
    accumulated up to the emergence time (the downhill-roll phase diverges
    at the pole and is excluded; see module docstring).  boundary_term:
    -x_i^2/(4 L^2).
    """

    prob_exponent: float
    phase: float
    boundary_term: complex
    contour: str
    coupling_scale: float = 1.0

    @property
    def suppressed_probability(self) -> float:
        return math.exp(self.prob_exponent * self.coupling_scale)

    def to_json_dict(self) -> dict:
        return {
            "probExponent": self.prob_exponent,
            "phase": self.phase,
            "boundaryTerm": [self.boundary_term.real, self.boundary_term.imag],
            "contour": self.contour,
            "couplingScale": self.coupling_scale,
            "suppressedProbability": self.suppressed_probability,
        }


def _lagrangian(params: TrajectoryParams, t: complex) -> complex:
    x, v = exact_state(params, t)
    return 0.5 * v * v - params.potential.v(x)


def _segment_quad(params: TrajectoryParams, a: float, b: float, part: str,
                  n_panels: int = 30) -> float:
    """Adaptive quadrature of Re/Im of the Lagrangian on a real interval."""
    fn = (lambda t: _lagrangian(params, t).imag) if part == "imag" else \
         (lambda t: _lagrangian(params, t).real)
    edges = np.linspace(a, b, n_panels + 1)
    total = 0.0
    with warnings.catch_warnings():
        # roundoff-detection chatter at the tight tolerance is expected
        warnings.simplefilter("ignore", IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=300)
            total += val
    return total


def _boundary_term(params: TrajectoryParams, boundary: BoundaryData) -> complex:
    x_i, _ = exact_state(params, boundary.t_i)
    return -x_i * x_i / (4.0 * boundary.L ** 2)


def action_exponent_real_time(traj: Trajectory, boundary: BoundaryData,
                              cutoff: float = _DEFAULT_CUTOFF) -> ActionExponent:
    """Probability exponent from the real-time action of a certified solution.

    Integrates Im(L) along the real axis from t_i to the cutoff before the
    escape pole; the closed form is re-evaluated at the quadrature nodes.
    Linear Richardson extrapolation in the cutoff removes the O(cutoff)
    remainder; if the extrapolated value moves by more than 1e-6 under
    cutoff halving a RegularizationError is raised.  The phase field carries
    Re(S) integrated up to the emergence time only.
    """
    params = traj.params
    if traj.max_energy_defect() > 1e-8 * max(1.0, abs(params.E)):
        raise PreconditionError("trajectory is not certified (energy defect too large)")
    t_pole = params.t0.real
    t_i = traj.t[0]

    def imag_action(delta: float) -> float:
        return _segment_quad(params, t_i, t_pole - delta, "imag")

    I1 = imag_action(cutoff)
    I2 = imag_action(cutoff / 2.0)
    I4 = imag_action(cutoff / 4.0)
    R1 = 2.0 * I2 - I1
    R2 = 2.0 * I4 - I2
    if abs(R2 - R1) > _CUTOFF_STABILITY:
        cutoff /= 4.0
        I1, I2 = imag_action(cutoff), imag_action(cutoff / 2.0)
        I4 = imag_action(cutoff / 4.0)
        R1, R2 = 2.0 * I2 - I1, 2.0 * I4 - I2
        if abs(R2 - R1) > _CUTOFF_STABILITY:
            raise RegularizationError(
                f"cutoff dependence {abs(R2 - R1):.2e} above {_CUTOFF_STABILITY}")
    im_S = R2

    b = _boundary_term(params, boundary)
    prob = -2.0 * im_S + 2.0 * b.real

    t_em = emergence_time(traj)
    phase = _segment_quad(params, t_i, t_em, "real")

    return ActionExponent(prob_exponent=prob, phase=phase, boundary_term=b,
                          contour="real-axis",
                          coupling_scale=params.potential.coupling_scale)


def _min_pole_distance_on_segment(params: TrajectoryParams, za: complex, zb: complex,
                                  n_probe: int = 64) -> float:
    s = params.argument_scale()
    ctx = params.ctx
    dmin = math.inf
    for lam in np.linspace(0.0, 1.0, n_probe):
        t = za + lam * (zb - za)
        w = (params.t0 - t) / s
        a, bcoord = _lattice_coords(w, 2.0 * ctx.K, 2j * ctx.Kprime)
        zero = 2.0 * round(a) * ctx.K + 2j * round(bcoord) * ctx.Kprime
        dmin = min(dmin, abs((w - zero) * s))
    return dmin


def action_along_contour(params: TrajectoryParams, contour: list[complex],
                         boundary: BoundaryData, include_boundary_term: bool = True,
                         nodes: int = 32, label: str = "custom") -> ActionExponent:
    """Action exponent along a complex-time polyline.

    By Cauchy's theorem any pole-avoiding contour with the same endpoints
    reproduces the real-axis result.  Each segment must clear every pole of
    the solution by at least 1e-2.  For open contours that do not start on
    the real axis (the Euclidean zero-line contour) set
    include_boundary_term=False; the exponent is then the pure contour
    integral.
    """
    if len(contour) < 2:
        raise DomainError("contour needs at least two points")
    for i, (za, zb) in enumerate(zip(contour[:-1], contour[1:])):
        d = _min_pole_distance_on_segment(params, complex(za), complex(zb))
        if d < _POLE_CLEARANCE:
            raise ContourError(
                f"segment {i} passes within {d:.2e} of a pole", segment=i)

    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0 + 0.0j
    for za, zb in zip(contour[:-1], contour[1:]):
        za, zb = complex(za), complex(zb)
        n_chunks = max(8, int(4.0 * abs(zb - za)))
        knots = np.linspace(za, zb, n_chunks + 1)
        for ka, kb in zip(knots[:-1], knots[1:]):
            mid, half = 0.5 * (ka + kb), 0.5 * (kb - ka)
            for xg, wg in zip(gl_x, gl_w):
                total += wg * half * _lagrangian(params, mid + half * xg)

    b = _boundary_term(params, boundary) if include_boundary_term else 0.0j
    prob = -2.0 * total.imag + 2.0 * b.real
    return ActionExponent(prob_exponent=prob, phase=total.real, boundary_term=b,
                          contour=label,
                          coupling_scale=params.potential.coupling_scale)


def build_zero_line_contour(params: TrajectoryParams, boundary: BoundaryData,
                            cutoff: float = _DEFAULT_CUTOFF,
                            from_real_axis: bool = True) -> list[complex]:
    """The deformed contour along the line of zeros above the real axis.

    Runs up from t_i to the zero line (offset b = i K' s), along it to half
    a lattice cell before the escape pole, down to the real axis (this leg
    is the Euclidean bounce in the m -> 0 limit), then along the real axis
    to the cutoff.  With from_real_axis=False the initial riser is dropped:
    the contour starts on the zero line, which isolates the Euclidean piece.
    """
    ctx = params.ctx
    s = params.argument_scale()
    a = 2.0 * ctx.K * s
    b = 1j * ctx.Kprime * s
    t_i = complex(boundary.t_i)
    t_end = params.t0.real - cutoff
    descent = params.t0 - a / 2.0
    pts = [t_i, t_i + b] if from_real_axis else [t_i + b]
    pts += [descent + b, descent, t_end]
    return pts


def emergence_time(traj: Trajectory, refine: bool = True) -> float:
    """Time of the last local minimum of Re x: the bounce off the barrier.

    The trajectory's real part descends to the turning-point region once
    more after the imaginary excursion and then rolls out to infinity; the
    last interior minimum of Re x is the emergence point.  (The literal
    last crossing of the turning point is not robust: depending on the
    branch phase Re x may graze the turning point without crossing.)
    """
    rex = traj.x.real
    mins = np.nonzero((rex[1:-1] < rex[:-2]) & (rex[1:-1] < rex[2:]))[0] + 1
    if len(mins) == 0:
        raise DomainError("no interior minimum of Re x: trajectory is monotone")
    k = mins[-1]
    if not refine:
        return float(traj.t[k])
    params = traj.params
    res = minimize_scalar(lambda t: exact_state(params, t)[0].real,
                          bracket=(traj.t[k - 1], traj.t[k], traj.t[k + 1]),
                          method="golden", options={"xtol": 1e-10})
    return float(res.x)


@dataclass
class ImagExcursion:
    """Peak of |Im x| and its timing relative to emergence."""

    t_star: float
    peak_im: complex
    epsilon: complex
    predicted_scale: float
    lead_time: float


def imag_excursion(traj: Trajectory, epsilon: complex | None = None) -> ImagExcursion:
    """Locate the imaginary-coordinate excursion of a certified trajectory.

    Golden-section refinement of the sampled |Im x| maximum; the lead time
    is measured to the emergence (bounce) time.  epsilon defaults to the
    solution's own parameter map (m = i eps quartic, m^2 = i eps cubic) but
    callers holding a SolveReport should pass seed_epsilon, which is
    representation-independent.
    """
    params = traj.params
    if epsilon is None:
        if params.potential.kind == PotentialKind.QUARTIC:
            epsilon = -1j * params.m
        else:
            epsilon = -1j * params.m * params.m
    k = int(np.argmax(np.abs(traj.x.imag)))
    if k == 0 or k == len(traj.t) - 1:
        raise DomainError("no interior maximum of |Im x|")
    res = minimize_scalar(lambda t: -abs(exact_state(params, t)[0].imag),
                          bracket=(traj.t[k - 1], traj.t[k], traj.t[k + 1]),
                          method="golden", options={"xtol": 1e-12})
    t_star = float(res.x)
    peak = exact_state(params, t_star)[0]
    t_em = emergence_time(traj)
    if params.potential.kind == PotentialKind.QUARTIC:
        scale = 0.4 / abs(epsilon)
    else:
        scale = 1.5 / abs(epsilon) ** 2
    return ImagExcursion(t_star=t_star, peak_im=peak, epsilon=epsilon,
                         predicted_scale=scale, lead_time=t_em - t_star)


@dataclass
class PointerConfig:
    """Weak-measurement pointer: coupling g, position uncertainty, time."""

    g: float
    delta_x: float
    hbar_eff: float
    t_m: float

    def __post_init__(self):
        if self.g <= 0:
            raise DomainError("coupling g must be positive")
        if self.g > 1e-2:
            raise DomainError("linear-response regime requires g <= 1e-2")
        if self.delta_x <= 0:
            raise DomainError("delta_x must be positive")


@dataclass
class PointerBias:
    """First-order mean shifts of the pointer readouts."""

    dX: float
    dP: float

    def to_json_dict(self, config: PointerConfig) -> dict:
        return {"t_m": config.t_m, "dX": self.dX, "dP": self.dP,
                "g": config.g, "deltaX": config.delta_x, "hbarEff": config.hbar_eff}


def pointer_bias(traj: Trajectory, config: PointerConfig) -> PointerBias:
    """Pointer position/momentum shifts from the complex trajectory.

    dX = g Re x(t_m); dP = g hbar_eff / (2 delta_x^2) Im x(t_m).  Exact at
    first order in g by construction.
    """
    if not (traj.t[0] <= config.t_m <= traj.t[-1]):
        raise DomainError(f"t_m = {config.t_m} outside the trajectory window "
                          f"[{traj.t[0]}, {traj.t[-1]}]")
    x, _ = exact_state(traj.params, config.t_m)
    dX = config.g * x.real
    dP = config.g * config.hbar_eff / (2.0 * config.delta_x ** 2) * x.imag
    return PointerBias(dX=dX, dP=dP)


@dataclass
class BranchRecord:
    branch: int
    converged: bool
    prob_exponent: float = math.nan
    energy: complex = complex("nan")
    epsilon: complex = complex("nan")
    transient: bool = False
    error: str = ""


def branch_suppression_compare(potential: Potential, boundary: BoundaryData,
                               branches: list[int]) -> list[BranchRecord]:
    """Solve several Lambert-W branches and rank them by probability exponent.

    Returns records sorted with the dominant (least suppressed) branch
    first; non-convergent branches are marked, not fatal.  A branch is
    flagged transient when it is less suppressed than the principal branch
    or carries a negative index.
    """
    records = []
    for n in branches:
        try:
            report, traj = solve_tunneling(potential, boundary, branch=n)
            exp = action_exponent_real_time(traj, boundary)
            records.append(BranchRecord(branch=n, converged=report.converged,
                                        prob_exponent=exp.prob_exponent,
                                        energy=report.params.E,
                                        epsilon=report.seed_epsilon,
                                        transient=report.transient))
        except Exception as exc:  # noqa: BLE001 - per spec, mark and continue
            records.append(BranchRecord(branch=n, converged=False, error=str(exc)))
    principal = next((r for r in records if r.branch == 0 and r.converged), None)
    if principal is not None:
        for r in records:
            if r.converged and (r.branch < 0 or r.prob_exponent > principal.prob_exponent + 1e-12):
                r.transient = True
    records.sort(key=lambda r: (not r.converged, -r.prob_exponent if r.converged else 0.0))
    return records
