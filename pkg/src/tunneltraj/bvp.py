"""Mixed boundary value problem: seeds, Newton refinement, certified solves.

The tunneling trajectory is fixed by two complex conditions: positive
frequency at the initial time, x + 2i L^2 xd = 0, and arrival at x_f at the
final time.  For the default post-selection x_f = infinity the final
condition collapses to t0 = t_f (the solution's pole sits at the final
time), leaving a single complex unknown m that the damped Newton iteration
drives to |residual| <= 1e-10.
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (Potential, PotentialKind, Trajectory, TrajectoryParams,
                       energy_of_m, exact_state, sample_trajectory, _cubic_constants)
from .errors import ConvergenceError, DomainError, PreconditionError, RangeWarning
from .specfun import lambert_w

INFINITY = math.inf

_NEWTON_TOL = 1e-10
_NEWTON_MAX_ITER = 50
_SEED_MIN_T = 5.0


@dataclass(frozen=True)
class BoundaryData:
    """Boundary data of the post-selected tunneling problem.

    x_f may be the float infinity (default post-selection) or a finite
    complex point on the escape side; L is the initial Gaussian width in
    dimensionless units, 1/sqrt(2) for the false-vacuum ground state.
    """

    t_i: float
    t_f: float
    x_f: complex = INFINITY
    L: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if not self.t_f > self.t_i:
            raise DomainError("t_f must exceed t_i")
        if not self.L > 0:
            raise DomainError("L must be positive")

    @property
    def T(self) -> float:
        return self.t_f - self.t_i

    @property
    def xf_infinite(self) -> bool:
        return self.x_f == INFINITY

    def validate_final(self, potential: Potential) -> None:
        if self.xf_infinite:
            return
        if abs(self.x_f) <= potential.turning_point:
            raise DomainError(
                f"finite x_f must lie beyond the turning point {potential.turning_point}")


@dataclass
class Residual:
    """Initial and final condition residuals of a candidate solution."""

    r_init: complex
    r_final: complex

    @property
    def max_abs(self) -> float:
        return max(abs(self.r_init), abs(self.r_final))


@dataclass
class SolveReport:
    params: TrajectoryParams
    branch: int
    iterations: int
    residual: Residual
    seed_epsilon: complex
    converged: bool
    transient: bool = False
    finite_xf_fallback: bool = False

    def to_json_dict(self, boundary: BoundaryData) -> dict:
        m, t0, E = self.params.m, self.params.t0, self.params.E
        eps = self.seed_epsilon
        xf = "inf" if boundary.xf_infinite else [boundary.x_f.real, boundary.x_f.imag]
        return {
            "potential": self.params.potential.kind.value,
            "t_i": boundary.t_i,
            "t_f": boundary.t_f,
            "x_f": xf,
            "L": boundary.L,
            "branch": self.branch,
            "m": [m.real, m.imag],
            "t0": [t0.real, t0.imag],
            "E": [E.real, E.imag],
            "epsilon": [eps.real, eps.imag],
            "residual": {"init": [self.residual.r_init.real, self.residual.r_init.imag],
                         "final": [self.residual.r_final.real, self.residual.r_final.imag]},
            "iterations": self.iterations,
            "converged": self.converged,
        }


def initial_condition_residual(params: TrajectoryParams, boundary: BoundaryData) -> complex:
    """Positive-frequency residual x + 2i L^2 xd at t_i.

    Reduces to x + i xd for the false-vacuum ground-state width L = 1/sqrt(2).
    """
    x, v = exact_state(params, boundary.t_i)
    return x + 2j * boundary.L ** 2 * v


def final_condition_t0(potential: Potential, x_f: complex, t_f: float,
                       m: complex | None = None) -> tuple[complex, float, bool]:
    """Time shift t0 implied by the final condition, with an error estimate.

    x_f = infinity pins t0 = t_f exactly.  For large finite x_f the Laurent
    series of the solution about its pole is inverted: t0 - t_f = 1/x_f +
    O(x_f^-3) for the quartic simple pole, t0 - t_f = sqrt(B)/(C sqrt(x_f)) +
    O(x_f^-3/2) for the cubic double pole (B, C from the closed form, so m is
    required there).  Below |x_f| = 10 the inversion is returned only as a
    seed and flagged for full final-residual refinement.
    """
    if x_f == INFINITY:
        return complex(t_f), 0.0, False
    x_f = complex(x_f)
    fallback = abs(x_f) < 10.0
    if fallback:
        warnings.warn("final_condition_t0 outside its validity window |x_f| >= 10; "
                      "falling back to full final-residual mode", RangeWarning, stacklevel=2)
    if potential.kind == PotentialKind.QUARTIC:
        t0 = t_f + 1.0 / x_f
        return t0, abs(x_f) ** -3, fallback
    if m is None:
        raise PreconditionError("cubic Laurent inversion requires the parameter m")
    _, B, C = _cubic_constants(complex(m))
    t0 = t_f + cmath.sqrt(B) / (C * cmath.sqrt(x_f))
    return t0, abs(x_f) ** -1.5, fallback


def seed_epsilon(kind: PotentialKind, T: float, branch: int = 0) -> tuple[complex, complex]:
    """Lambert-W seed (epsilon, m) from the early-time transcendental equation.

    Quartic: 3 eps T e^{3 eps T} = 48 i T e^{-4iT},  m = i eps.
    Cubic:  (45/64) eps T e^{(45/64) eps T} = -180 i T e^{-3iT},  m^2 = i eps
    (the -sqrt branch feeds the tunneling family).

    The returned pair satisfies its equation to 1e-12 relative; T below 5 is
    outside the asymptotic window and flagged.
    """
    if T < _SEED_MIN_T:
        warnings.warn(f"seed asymptotics assume T >= {_SEED_MIN_T}, got T = {T}",
                      RangeWarning, stacklevel=2)
    if kind == PotentialKind.QUARTIC:
        rhs = 48j * T * cmath.exp(-4j * T)
        w = lambert_w(branch, rhs)
        eps = w / (3.0 * T)
        check = 3.0 * eps * T * cmath.exp(3.0 * eps * T)
        m = 1j * eps
    else:
        rhs = -180j * T * cmath.exp(-3j * T)
        w = lambert_w(branch, rhs)
        eps = 64.0 * w / (45.0 * T)
        check = (45.0 / 64.0) * eps * T * cmath.exp((45.0 / 64.0) * eps * T)
        m = -cmath.sqrt(1j * eps)
    if abs(check - rhs) > 1e-12 * abs(rhs):
        raise ConvergenceError(
            f"seed does not satisfy its transcendental equation: defect {abs(check - rhs):.2e}")
    return eps, m


def _residual_vector(m: complex, t0: complex, boundary: BoundaryData,
                     potential: Potential) -> Residual:
    params = TrajectoryParams.from_m(m, t0, potential)
    r_init = initial_condition_residual(params, boundary)
    if boundary.xf_infinite:
        r_final = t0 - boundary.t_f
    else:
        x_f, _ = exact_state(params, boundary.t_f)
        r_final = x_f - boundary.x_f
    return Residual(r_init=r_init, r_final=r_final)


def newton_refine(seed: TrajectoryParams, boundary: BoundaryData,
                  branch: int = 0, seed_eps: complex = 0j,
                  tol: float = _NEWTON_TOL, max_iter: int = _NEWTON_MAX_ITER) -> SolveReport:
    """Damped complex Newton iteration on the boundary residuals.

    With x_f infinite t0 is eliminated (t0 = t_f) and the solve is one
    complex equation in m; otherwise (m, t0) are solved jointly with a 2x2
    complex Jacobian.  Jacobians come from central differences on the closed
    form, which is holomorphic in both unknowns.  Steps are halved until the
    residual norm decreases (monotone line search).
    """
    potential = seed.potential
    boundary.validate_final(potential)
    solve_t0 = not boundary.xf_infinite
    m = seed.m
    t0 = seed.t0 if solve_t0 else complex(boundary.t_f)
    fallback = False

    def res(mm, tt0) -> Residual:
        return _residual_vector(mm, tt0, boundary, potential)

    r = res(m, t0)
    iterations = 0
    converged = r.max_abs <= tol
    for iterations in range(1, max_iter + 1):
        if converged:
            break
        if solve_t0:
            h_m = 1e-7 * max(1.0, abs(m))
            h_t = 1e-7 * max(1.0, abs(t0))
            rp_m, rm_m = res(m + h_m, t0), res(m - h_m, t0)
            rp_t, rm_t = res(m, t0 + h_t), res(m, t0 - h_t)
            J = np.array([
                [(rp_m.r_init - rm_m.r_init) / (2 * h_m), (rp_t.r_init - rm_t.r_init) / (2 * h_t)],
                [(rp_m.r_final - rm_m.r_final) / (2 * h_m), (rp_t.r_final - rm_t.r_final) / (2 * h_t)],
            ])
            rhs = np.array([r.r_init, r.r_final])
            try:
                step = np.linalg.solve(J, rhs)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(
                    "singular Jacobian: likely a branch bifurcation; try another branch") from exc
            dm, dt0 = step[0], step[1]
        else:
            h = 1e-7 * max(1.0, abs(m))
            dr = (res(m + h, t0).r_init - res(m - h, t0).r_init) / (2 * h)
            if dr == 0:
                raise ConvergenceError(
                    "vanishing derivative: likely a branch bifurcation; try another branch")
            dm, dt0 = r.r_init / dr, 0.0

        lam, accepted = 1.0, False
        for _ in range(40):
            try:
                r_new = res(m - lam * dm, t0 - lam * dt0)
            except DomainError:
                lam *= 0.5
                continue
            if r_new.max_abs < r.max_abs:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        m, t0 = m - lam * dm, t0 - lam * dt0
        r = res(m, t0)
        converged = r.max_abs <= tol

    params = TrajectoryParams.from_m(m, t0, potential)
    transient = branch < 0
    return SolveReport(params=params, branch=branch, iterations=iterations,
                       residual=r, seed_epsilon=seed_eps, converged=converged,
                       transient=transient, finite_xf_fallback=fallback)


def _runaway_cutoff(params: TrajectoryParams, t_f: float,
                    threshold: float) -> float:
    """Offset d with |x(t_f - d)| ~ threshold, from the Laurent inversion."""
    if params.potential.kind == PotentialKind.QUARTIC:
        d0 = 1.0 / threshold
    else:
        _, B, C = _cubic_constants(params.m)
        d0 = abs(cmath.sqrt(B) / (C * math.sqrt(threshold)))
    # secant polish on log|x|
    d = d0
    for _ in range(30):
        x, _ = exact_state(params, t_f - d)
        f = math.log(abs(x) / threshold)
        x2, _ = exact_state(params, t_f - d * 1.01)
        f2 = math.log(abs(x2) / threshold)
        df = (f2 - f) / (0.01 * d)
        if df == 0:
            break
        d_new = d - f / df
        if d_new <= 0:
            d_new = d / 2
        if abs(d_new - d) < 1e-12 * d:
            d = d_new
            break
        d = d_new
    return d


def solve_tunneling(potential: Potential, boundary: BoundaryData, branch: int = 0,
                    n_samples: int = 4001,
                    runaway_threshold: float = 1e3) -> tuple[SolveReport, Trajectory]:
    """Seed, refine, and sample a certified tunneling trajectory.

    The sampled window is [t_i, t_f - d] with d chosen so |x| stays at or
    below the runaway threshold; the trajectory always carries at least 2000
    samples.
    """
    boundary.validate_final(potential)
    eps, m_seed = seed_epsilon(potential.kind, boundary.T, branch)
    if boundary.xf_infinite:
        t0_seed = complex(boundary.t_f)
    else:
        t0_seed, _, _ = final_condition_t0(potential, boundary.x_f, boundary.t_f, m_seed)
    seed = TrajectoryParams.from_m(m_seed, t0_seed, potential)
    report = newton_refine(seed, boundary, branch=branch, seed_eps=eps)
    if report.converged and report.params.E.real > 0 and branch < 0:
        report.transient = True
    n_samples = max(n_samples, 2001)
    t_end_pole = report.params.t0.real
    d = _runaway_cutoff(report.params, t_end_pole, runaway_threshold)
    t_end = min(boundary.t_f, t_end_pole) - d
    traj = sample_trajectory(report.params, boundary.t_i, t_end, n_samples)
    traj.runaway = True
    return report, traj


def basin_uniqueness_scan(potential: Potential, boundary: BoundaryData,
                          certified_m: complex, branch: int = 0,
                          grid_n: int = 13) -> list[complex]:
    """Brute-force root scan of the boundary residual around a certified root.

    A coarse complex-m lattice centred on the certified root, each node
    refined by the full Newton iteration; distinct converged roots within
    the scan radius are returned (the certified root itself included).  The
    radius is capped at the distance separating adjacent Lambert-branch
    solutions (2 pi / 3T in epsilon, mapped to m), below which "the" root of
    the seeded branch is the only meaningful uniqueness question.
    """
    T = boundary.T
    if potential.kind == PotentialKind.QUARTIC:
        branch_spacing = 2.0 * math.pi / (3.0 * T)
    else:
        dm_deps = 1.0 / (2.0 * abs(certified_m))
        branch_spacing = (2.0 * math.pi * 64.0 / (45.0 * T)) * dm_deps
    radius = min(0.1, 0.45 * branch_spacing)

    roots: list[complex] = []
    for re in np.linspace(-radius, radius, grid_n):
        for im in np.linspace(-radius, radius, grid_n):
            m0 = certified_m + complex(re, im)
            if abs(m0 - certified_m) > radius:
                continue
            try:
                seed = TrajectoryParams.from_m(m0, boundary.t_f, potential)
                rep = newton_refine(seed, boundary, branch=branch)
            except (DomainError, ConvergenceError):
                continue
            if not rep.converged:
                continue
            root = rep.params.m
            if abs(root - certified_m) > radius:
                continue
            if all(abs(root - r) > 1e-6 for r in roots):
                roots.append(root)
    return roots


def report_to_json(report: SolveReport, boundary: BoundaryData) -> str:
    return json.dumps(report.to_json_dict(boundary), indent=1)
