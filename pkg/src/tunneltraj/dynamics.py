"""Potentials, closed-form complex trajectories, and their pole/zero lattice.

Everything is computed in the dimensionless units in which the false-vacuum
frequency is 1: the quartic well is V = x^2/2 - x^4/2 (zero crossing at
x = 1) and the cubic well is V = x^2/2 - x^3/3 (zero-energy turning point at
x = 3/2).  The overall action scale S0/hbar multiplies exponents only and is
carried separately as `coupling_scale`.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, PoleProximity, PreconditionError, RangeWarning
from . import specfun
from .specfun import EllipticContext

import warnings

_ENERGY_MAP_TOL = 1e-10
_RUNAWAY_DEFAULT = 1e3


class PotentialKind(str, Enum):
    QUARTIC = "quartic"
    CUBIC = "cubic"


@dataclass(frozen=True)
class Potential:
    """A tunneling potential in dimensionless units plus its action scale.

    coupling_scale is the large parameter multiplying the dimensionless
    action in exponents (kappa^{3/2} m^{1/2} / (hbar lambda) for the quartic,
    kappa^{5/2} m^{1/2} / (hbar lambda^2) for the cubic).
    """

    kind: PotentialKind
    coupling_scale: float = 1.0

    def __post_init__(self):
        if self.coupling_scale <= 0:
            raise DomainError("coupling_scale must be positive")

    def v(self, x):
        if self.kind == PotentialKind.QUARTIC:
            return 0.5 * x * x - 0.5 * x ** 4
        return 0.5 * x * x - x ** 3 / 3.0

    def dv(self, x):
        if self.kind == PotentialKind.QUARTIC:
            return x - 2.0 * x ** 3
        return x - x * x

    @property
    def turning_point(self) -> float:
        """Zero-energy turning point on the escape side."""
        return 1.0 if self.kind == PotentialKind.QUARTIC else 1.5

    @property
    def barrier_top(self) -> float:
        return 1.0 / math.sqrt(2.0) if self.kind == PotentialKind.QUARTIC else 1.0

    @property
    def barrier_height(self) -> float:
        return 0.125 if self.kind == PotentialKind.QUARTIC else 1.0 / 6.0


QUARTIC = Potential(PotentialKind.QUARTIC)
CUBIC = Potential(PotentialKind.CUBIC)


def potential_value(p: Potential, x: complex) -> complex:
    """V(x) continued to complex x."""
    return p.v(x)


def energy_of_m(kind: PotentialKind, m: complex) -> complex:
    """Energy of the closed-form solution labelled by elliptic parameter m."""
    m = complex(m)
    if kind == PotentialKind.QUARTIC:
        return m / (2.0 * (1.0 + m) ** 2)
    g = cmath.sqrt(1.0 + m * (m - 1.0))
    return 1.0 / 12.0 - (2.0 * m - 1.0) * (m - 2.0) * (m + 1.0) / (24.0 * g ** 3)


def _cubic_constants(m: complex) -> tuple[complex, complex, complex]:
    """Constants (A, B, C) of x = A + B / sn^2(C (t0 - t) | m).

    Matching powers of sn in the equation of motion forces
    A = (1 - (1+m)/g)/2, B = 3/(2g), C = 1/(2 g^{1/2}) with
    g = sqrt(1 + m(m-1)); the m = 1 limit then sits at the barrier top
    x = 1 and the m = 0 limit is the zero-energy solution.
    """
    g = cmath.sqrt(1.0 + m * (m - 1.0))
    return 0.5 * (1.0 - (1.0 + m) / g), 1.5 / g, 1.0 / (2.0 * cmath.sqrt(g))


@dataclass(frozen=True)
class TrajectoryParams:
    """Integration constants of a closed-form solution.

    The elliptic parameter m and complex time shift t0 label the solution;
    E is redundant but stored for convenience and validated against the
    energy map at construction.
    """

    m: complex
    t0: complex
    E: complex
    potential: Potential
    ctx: EllipticContext = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        expected = energy_of_m(self.potential.kind, self.m)
        if abs(self.E - expected) > _ENERGY_MAP_TOL * max(1.0, abs(expected)):
            raise DomainError(
                f"(m, E) pair violates the energy map: got E={self.E}, expected {expected}")
        if self.ctx is None:
            object.__setattr__(self, "ctx", EllipticContext.from_parameter(self.m))

    @classmethod
    def from_m(cls, m: complex, t0: complex, potential: Potential) -> "TrajectoryParams":
        return cls(m=complex(m), t0=complex(t0), E=energy_of_m(potential.kind, m),
                   potential=potential)

    def argument_scale(self) -> complex:
        """Scale s with sn-argument (t0 - t)/s; lattice sides are a=2Ks, b=iK's."""
        if self.potential.kind == PotentialKind.QUARTIC:
            return cmath.sqrt(1.0 + self.m)
        _, _, C = _cubic_constants(self.m)
        return 1.0 / C


def exact_state(params: TrajectoryParams, t: complex) -> tuple[complex, complex]:
    """Closed-form (x, dx/dt) at complex time t.

    Quartic: x = 1/(sqrt(1+m) sn((t0-t)/sqrt(1+m) | m)).
    Cubic:   x = A + B / sn^2(C (t0-t) | m).

    Within the pole guard of a zero of sn (a pole of x) a PoleProximity is
    raised carrying the pole position in t and the leading Laurent
    coefficient.  At poles of sn (zeros of x, or x = A for the cubic) the
    local Laurent data of sn is used instead of the overflowing quotient.
    """
    m, t0 = params.m, params.t0
    ctx = params.ctx
    if params.potential.kind == PotentialKind.QUARTIC:
        s = cmath.sqrt(1.0 + m)
        w = (t0 - t) / s
        zero, sign = specfun.nearest_sn_zero(w, ctx)
        if abs(w - zero) < 1e-6:
            # pole of x; residue in t is (-1)^j
            t_pole = t0 - s * zero
            raise PoleProximity(pole=t_pole, laurent=sign, order=1)
        try:
            sn, dsn = specfun.sn_with_derivative(w, m, ctx)
        except PoleProximity as sig:
            # sn pole -> x ~ (w - w_p)/(s * residue): evaluate by Laurent data
            d = w - sig.pole
            x = d / (s * sig.laurent)
            v = -1.0 / (s * s * sig.laurent)
            return x, v
        x = 1.0 / (s * sn)
        v = dsn / ((1.0 + m) * sn * sn)
        return x, v

    A, B, C = _cubic_constants(m)
    w = C * (t0 - t)
    zero, sign = specfun.nearest_sn_zero(w, ctx)
    if abs(w - zero) < 1e-6:
        t_pole = t0 - zero / C
        raise PoleProximity(pole=t_pole, laurent=B / (C * C), order=2)
    try:
        sn, dsn = specfun.sn_with_derivative(w, m, ctx)
    except PoleProximity as sig:
        d = w - sig.pole
        R = sig.laurent
        x = A + B * d * d / (R * R)
        v = -2.0 * B * C * d / (R * R)
        return x, v
    x = A + B / (sn * sn)
    v = 2.0 * B * C * dsn / sn ** 3
    return x, v


def exact_solution(params: TrajectoryParams, t: complex) -> complex:
    """Closed-form position x(t); see exact_state."""
    return exact_state(params, t)[0]


def nearest_pole_distance(params: TrajectoryParams, t: complex) -> float:
    """Distance from t to the nearest pole of the solution."""
    s = params.argument_scale()
    w = (params.t0 - t) / s
    zero, _ = specfun.nearest_sn_zero(w, params.ctx)
    return abs((w - zero) * s)


_STENCIL_8 = np.array([-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72,
                       8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560])


def equation_of_motion_residual(params: TrajectoryParams, t: complex, base_step: float = 1e-3) -> complex:
    """|xdd + V'(x)| certification of the closed form by finite differences.

    8th-order central stencil with step 1e-3 scaled by the distance to the
    nearest pole.  Roundoff in the stencil grows like |x|/h^2, so the 1e-8
    certification is meaningful at pole distance >~ 0.5 and degrades (but
    stays finite) down to the 1e-2 guard.
    """
    d = nearest_pole_distance(params, t)
    if d < 1e-2:
        raise PoleProximity(pole=t, laurent=None,
                            message=f"residual check too close to a pole (distance {d:.2e})")
    h = base_step * d
    xs = np.array([exact_solution(params, t + (k - 4) * h) for k in range(9)])
    acc = (_STENCIL_8 * xs).sum() / (h * h)
    x0 = xs[4]
    return acc + params.potential.dv(x0)


@dataclass
class Trajectory:
    """A sampled complex trajectory over a real-time window."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    params: TrajectoryParams
    window: tuple[float, float]
    runaway: bool = False

    def __post_init__(self):
        if not np.all(np.diff(self.t) > 0):
            raise DomainError("sample times must be strictly increasing")

    def energy_samples(self):
        return 0.5 * self.v ** 2 + self.params.potential.v(self.x)

    def max_energy_defect(self, relative: bool = True) -> float:
        """Worst energy-conservation defect over the samples.

        With relative=True each defect is scaled by the size of the
        kinetic/potential terms entering the cancellation, which is the
        resolution floor of double precision once |x| grows large near the
        escape pole; relative=False returns the raw absolute defect.
        """
        defect = np.abs(self.energy_samples() - self.params.E)
        if not relative:
            return float(np.max(defect))
        scale = np.maximum(1.0, np.abs(0.5 * self.v ** 2) + np.abs(self.params.potential.v(self.x)))
        return float(np.max(defect / scale))


def sample_trajectory(params: TrajectoryParams, t_start: float, t_end: float,
                      n: int = 4001) -> Trajectory:
    """Sample the closed form on a uniform real-time grid."""
    ts = np.linspace(t_start, t_end, n)
    xs = np.empty(n, dtype=complex)
    vs = np.empty(n, dtype=complex)
    for i, t in enumerate(ts):
        xs[i], vs[i] = exact_state(params, t)
    return Trajectory(t=ts, x=xs, v=vs, params=params, window=(t_start, t_end))


def integrate_trajectory(params: TrajectoryParams, window: tuple[float, float],
                         x0: complex, v0: complex,
                         runaway_threshold: float = _RUNAWAY_DEFAULT,
                         rtol: float = 1e-12, atol: float = 1e-12,
                         n_eval: int = 2001) -> Trajectory:
    """Numerically integrate the complex equation of motion along real time.

    Independent cross-check of the closed forms: adaptive 8th-order
    Runge-Kutta (DOP853) on (x, v), terminating with a runaway flag when |x|
    crosses `runaway_threshold`.  The initial state must match the labelled
    energy to 1e-10.
    """
    t_i, t_f = window
    if not (math.isfinite(t_i) and math.isfinite(t_f) and t_f > t_i):
        raise PreconditionError("window must be finite with t_f > t_i")
    E0 = 0.5 * v0 * v0 + params.potential.v(x0)
    if abs(E0 - params.E) > 1e-10 * max(1.0, abs(params.E)):
        raise PreconditionError(
            f"initial data energy {E0} inconsistent with params.E = {params.E}")

    pot = params.potential

    def rhs(t, y):
        x, v = y[0], y[1]
        return [v, -pot.dv(x)]

    def runaway(t, y):
        return abs(y[0]) - runaway_threshold

    runaway.terminal = True
    runaway.direction = 1.0

    sol = solve_ivp(rhs, (t_i, t_f), np.array([x0, v0], dtype=complex), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=runaway)
    if not sol.success and sol.status != 1:
        raise PreconditionError(f"integration failed: {sol.message}")
    hit_runaway = sol.status == 1
    t_end = sol.t[-1]
    ts = np.linspace(t_i, t_end, n_eval)
    ys = sol.sol(ts)
    return Trajectory(t=ts, x=ys[0], v=ys[1], params=params, window=(t_i, t_end),
                      runaway=hit_runaway)


def early_time_expansion(kind: PotentialKind, m: complex, Z: complex) -> complex:
    """Early-time asymptotic position in the large parameter Z = e^{iU}.

    Quartic: x ~ 2i/Z + 2i/Z^3 + (m/8i) Z      (corrections O(m^{1/2}))
    Cubic:   x ~ -6(1+m)/Z^2 - 12/Z^4 - (3/128) m^2 Z^2 + (63/64) m^2
                                                (corrections O(m^{2/3}))
    """
    m, Z = complex(m), complex(Z)
    if abs(m) >= 0.1:
        warnings.warn(f"early-time expansion outside |m| < 0.1 (|m| = {abs(m):.3g})",
                      RangeWarning, stacklevel=2)
    if kind == PotentialKind.QUARTIC:
        suppress = abs(m) ** 0.5
        x = 2j / Z + 2j / Z ** 3 + (m / 8j) * Z
    else:
        suppress = abs(m) ** (2.0 / 3.0)
        x = -6.0 * (1.0 + m) / Z ** 2 - 12.0 / Z ** 4 - (3.0 / 128.0) * m * m * Z * Z \
            + (63.0 / 64.0) * m * m
    if suppress > 0.5:
        warnings.warn("early-time expansion has O(1) neglected terms here",
                      RangeWarning, stacklevel=2)
    return x


@dataclass
class PoleZeroLattice:
    """Poles and zeros of the closed-form solution in the complex t-plane.

    side_a and side_b are the parallelogram sides; poles sit at
    t0 + j a + 2k b and zeros (x = A crossings for the cubic) at
    t0 + j a + (2k+1) b.
    """

    side_a: complex
    side_b: complex
    zeros: list
    poles: list
    pole_order: int


def pole_zero_lattice(params: TrajectoryParams, rect: tuple[complex, complex]) -> PoleZeroLattice:
    """Enumerate lattice poles and zeros inside a complex-time rectangle.

    rect = (corner_lo, corner_hi) with corner_lo.real <= corner_hi.real and
    corner_lo.imag <= corner_hi.imag.
    """
    lo, hi = complex(rect[0]), complex(rect[1])
    if not (math.isfinite(lo.real) and math.isfinite(hi.real)):
        raise DomainError("rectangle must be finite")
    s = params.argument_scale()
    ctx = params.ctx
    a = 2.0 * ctx.K * s
    b = 1j * ctx.Kprime * s
    det = a.real * b.imag - a.imag * b.real
    if abs(det) < 1e-12:
        raise DomainError("degenerate lattice (parameter too close to the branch cut)")

    corners = [lo, complex(hi.real, lo.imag), complex(lo.real, hi.imag), hi]
    js, ks = [], []
    for c in corners:
        aa, bb = specfun._lattice_coords(c - params.t0, a, b)
        js.append(aa)
        ks.append(bb)
    j_range = range(math.floor(min(js)) - 1, math.ceil(max(js)) + 2)
    k_range = range(math.floor(min(ks)) - 1, math.ceil(max(ks)) + 2)

    def inside(t):
        return (lo.real - 1e-12 <= t.real <= hi.real + 1e-12
                and lo.imag - 1e-12 <= t.imag <= hi.imag + 1e-12)

    poles, zeros = [], []
    for j in j_range:
        for k in k_range:
            t = params.t0 + j * a + k * b
            if not inside(t):
                continue
            (poles if k % 2 == 0 else zeros).append(t)
    order = 1 if params.potential.kind == PotentialKind.QUARTIC else 2
    key = lambda z: (z.real, z.imag)
    return PoleZeroLattice(side_a=a, side_b=b, zeros=sorted(zeros, key=key),
                           poles=sorted(poles, key=key), pole_order=order)


# --- export schema -----------------------------------------------------------

_CSV_HEADER = "t,re_x,im_x,re_v,im_v,re_E,im_E"


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def trajectory_to_csv(traj: Trajectory) -> str:
    """Fixed-header CSV with 12 significant digits (byte-stable)."""
    E = traj.params.E
    lines = [_CSV_HEADER]
    for t, x, v in zip(traj.t, traj.x, traj.v):
        lines.append(",".join(_fmt(val) for val in
                              (t, x.real, x.imag, v.real, v.imag, E.real, E.imag)))
    return "\n".join(lines) + "\n"


def trajectory_to_json(traj: Trajectory) -> str:
    """JSON array equivalent of the CSV schema."""
    E = traj.params.E
    rows = []
    for t, x, v in zip(traj.t, traj.x, traj.v):
        rows.append({"t": float(_fmt(t)), "re_x": float(_fmt(x.real)), "im_x": float(_fmt(x.imag)),
                     "re_v": float(_fmt(v.real)), "im_v": float(_fmt(v.imag)),
                     "re_E": float(_fmt(E.real)), "im_E": float(_fmt(E.imag))})
    return json.dumps(rows, indent=1)
