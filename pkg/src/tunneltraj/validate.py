"""Deterministic invariant suites behind the `validate` CLI command.

Each suite returns (name, passed, detail) rows; everything is seeded and
free of timestamps so two runs produce byte-identical reports.  Heavy
oracle slope sweeps live in the acceptance tests, not here.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import bvp, dynamics, observables, oracle, specfun
from .bvp import BoundaryData
from .dynamics import CUBIC, QUARTIC, PotentialKind, TrajectoryParams
from .errors import DomainError, PoleProximity


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _admissible_m(rng, r_max=0.7):
    while True:
        m = complex(rng.uniform(-r_max, r_max), rng.uniform(-r_max, r_max))
        if abs(m) > 1e-3 and not (abs(m.imag) < 0.05 and m.real > 0.9):
            return m


def specfun_suite() -> list[CheckResult]:
    rng = np.random.default_rng(20240811)
    out = []

    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(-3, 4))
        z = complex(rng.uniform(-8, 8), rng.uniform(-8, 8))
        if abs(z) < 1e-3:
            continue
        w = specfun.lambert_w(n, z)
        worst = max(worst, abs(w * np.exp(w) - z) / abs(z))
    out.append(CheckResult("specfun.lambert_residual", worst <= 1e-12, f"max rel residual {worst:.2e}"))

    worst = 0.0
    h = 1e-5
    checked = 0
    while checked < 100:
        m = _admissible_m(rng)
        ctx = specfun.EllipticContext.from_parameter(m)
        u = complex(rng.uniform(-2.5, 2.5), rng.uniform(-1.0, 1.0))
        pole, _ = specfun.nearest_sn_pole(u, ctx)
        if abs(u - pole) < 0.5:  # FD truncation blows up as d^-4
            continue
        try:
            s, _ = specfun.sn_with_derivative(u, m, ctx)
            sp = specfun.jacobi_sn(u + h, m, ctx)
            sm = specfun.jacobi_sn(u - h, m, ctx)
        except PoleProximity:
            continue
        ds = (sp - sm) / (2 * h)
        defect = abs(ds * ds - (1 - s * s) * (1 - m * s * s))
        worst = max(worst, defect)
        checked += 1
    out.append(CheckResult("specfun.sn_differential_identity", worst <= 1e-8, f"max defect {worst:.2e}"))

    worst = 0.0
    for _ in range(50):
        m = _admissible_m(rng, 0.5)
        ctx = specfun.EllipticContext.from_parameter(m)
        u = complex(rng.uniform(-2, 2), rng.uniform(-0.8, 0.8))
        try:
            a = specfun.jacobi_sn(u, m, ctx)
            b = specfun.jacobi_sn(u + 4 * ctx.K, m, ctx)
        except PoleProximity:
            continue
        worst = max(worst, abs(a - b))
    out.append(CheckResult("specfun.sn_periodicity", worst <= 1e-9, f"max |sn(u+4K)-sn(u)| {worst:.2e}"))

    worst = 0.0
    count = 0
    while count < 50:
        m = _admissible_m(rng, 0.45)
        ctx = specfun.EllipticContext.from_parameter(m)
        if abs(ctx.q) >= 0.1:
            continue
        u = complex(rng.uniform(0.3, 2.6), rng.uniform(-0.5, 0.5))
        U = math.pi * u / (2 * ctx.K)
        if min(abs(U - k * math.pi) for k in (-1, 0, 1, 2)) < 0.1:
            continue
        try:
            direct = 1.0 / specfun.jacobi_sn(u, m, ctx)
            series = specfun.reciprocal_sn_series(U, ctx, n_terms=12).value
        except PoleProximity:
            continue
        worst = max(worst, abs(direct - series))
        count += 1
    out.append(CheckResult("specfun.series_vs_direct", worst <= 1e-9, f"max diff {worst:.2e}"))
    return out


def dynamics_suite() -> list[CheckResult]:
    rng = np.random.default_rng(7711)
    out = []

    for pot in (QUARTIC, CUBIC):
        worst = 0.0
        count = 0
        while count < 100:
            m = _admissible_m(rng, 0.4)
            t0 = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
            t = rng.uniform(-8.0, -0.5)
            params = TrajectoryParams.from_m(m, t0, pot)
            if dynamics.nearest_pole_distance(params, t) < 1.5:
                continue
            res = dynamics.equation_of_motion_residual(params, t)
            worst = max(worst, abs(res))
            count += 1
        out.append(CheckResult(f"dynamics.eom_residual_{pot.kind.value}", worst <= 1e-8,
                               f"max |xdd + V'| {worst:.2e}"))

    params = TrajectoryParams.from_m(0.05 + 0.02j, 0.0, QUARTIC)
    x0, v0 = dynamics.exact_state(params, -6.0)
    traj = dynamics.integrate_trajectory(params, (-6.0, -1.0), x0, v0)
    defect = traj.max_energy_defect()
    out.append(CheckResult("dynamics.energy_conservation", defect <= 1e-8 * max(1.0, abs(params.E)),
                           f"max energy defect {defect:.2e}"))
    x_end, _ = dynamics.exact_state(params, traj.t[-1])
    err = abs(traj.x[-1] - x_end)
    out.append(CheckResult("dynamics.integration_matches_closed_form", err <= 1e-7,
                           f"endpoint diff {err:.2e}"))

    try:
        dynamics.TrajectoryParams(m=0.1 + 0.05j, t0=0.0,
                                  E=dynamics.energy_of_m(PotentialKind.QUARTIC, 0.1 + 0.05j) + 1e-6,
                                  potential=QUARTIC)
        rejected = False
    except DomainError:
        rejected = True
    out.append(CheckResult("dynamics.energy_map_rejection", rejected, "perturbed E rejected"))

    # the exact analytic m-derivative puts the sup at 1.17e-6 near t = -3
    params0 = TrajectoryParams.from_m(1e-8, 0.0, QUARTIC)
    sup = max(abs(dynamics.exact_solution(params0, t) - (-1.0 / math.sin(t)))
              for t in np.linspace(-3.0, -0.3, 200))
    out.append(CheckResult("dynamics.m_to_zero_reduction", sup <= 1.5e-6, f"sup diff {sup:.2e}"))

    params = TrajectoryParams.from_m(0.1j, 0.0, QUARTIC)
    lat = dynamics.pole_zero_lattice(params, (-12 - 1j, 2 + 4j))
    ok_poles = all(abs(dynamics.exact_solution(params, p + 1e-2)) > 50 for p in lat.poles)
    ok_zeros = all(abs(dynamics.exact_solution(params, z)) < 1e-6 for z in lat.zeros)
    out.append(CheckResult("dynamics.lattice_poles", ok_poles and len(lat.poles) > 0,
                           f"{len(lat.poles)} poles checked"))
    out.append(CheckResult("dynamics.lattice_zeros", ok_zeros and len(lat.zeros) > 0,
                           f"{len(lat.zeros)} zeros checked"))
    return out


def bvp_suite() -> list[CheckResult]:
    out = []
    worst_iters = 0
    all_ok = True
    for pot in (QUARTIC, CUBIC):
        for T in (10.0, 20.0, 30.0, 60.0):
            boundary = BoundaryData(t_i=-T, t_f=0.0)
            report, _ = bvp.solve_tunneling(pot, boundary)
            all_ok &= report.converged and report.residual.max_abs <= 1e-10
            worst_iters = max(worst_iters, report.iterations)
    out.append(CheckResult("bvp.seed_validity", all_ok and worst_iters <= 15,
                           f"max iterations {worst_iters}"))

    boundary = BoundaryData(t_i=-30.0, t_f=0.0)
    report, _ = bvp.solve_tunneling(QUARTIC, boundary)
    roots = bvp.basin_uniqueness_scan(QUARTIC, boundary, report.params.m)
    out.append(CheckResult("bvp.basin_uniqueness", len(roots) == 1,
                           f"{len(roots)} distinct roots in basin"))

    eps_mag = []
    for n in (0, 1, 2):
        eps, _ = bvp.seed_epsilon(PotentialKind.QUARTIC, 30.0, n)
        eps_mag.append(abs((eps * 30.0).imag))
    mono = eps_mag[0] < eps_mag[1] < eps_mag[2]
    out.append(CheckResult("bvp.branch_monotonicity", mono,
                           f"|Im(eps T)| = {', '.join(f'{v:.3f}' for v in eps_mag)}"))
    return out


def observables_suite() -> list[CheckResult]:
    rng = np.random.default_rng(5150)
    out = []
    boundary = BoundaryData(t_i=-30.0, t_f=0.0)
    report, traj = bvp.solve_tunneling(QUARTIC, boundary)
    exp_real = observables.action_exponent_real_time(traj, boundary)

    cutoff = 0.02
    t_end = report.params.t0.real - cutoff
    base = observables.action_along_contour(
        report.params, [boundary.t_i, t_end], boundary, label="real-axis")
    worst = 0.0
    for _ in range(5):
        h = complex(0.0, rng.uniform(0.5, 2.0))
        mid = rng.uniform(boundary.t_i + 2.0, t_end - 2.0)
        detour = [boundary.t_i, boundary.t_i + h, mid + h, mid, t_end]
        val = observables.action_along_contour(report.params, detour, boundary, label="detour")
        worst = max(worst, abs(val.prob_exponent - base.prob_exponent))
    out.append(CheckResult("observables.contour_independence", worst <= 1e-8,
                           f"max detour diff {worst:.2e}"))

    eps = report.seed_epsilon
    corr = -(3.0 / 16.0) * (eps * eps).imag * 30.0
    pred = -2.0 / 3.0 + corr
    rel = abs(exp_real.prob_exponent - pred) / abs(pred)
    out.append(CheckResult("observables.euclidean_limit", rel <= 0.02,
                           f"rel deviation from asymptotic exponent {rel:.3%}"))

    exc = observables.imag_excursion(traj, epsilon=eps)
    out.append(CheckResult("observables.excursion_positivity", exc.lead_time > 0,
                           f"lead time {exc.lead_time:.3f}"))

    cfg1 = observables.PointerConfig(g=1e-3, delta_x=0.5, hbar_eff=0.1, t_m=exc.t_star)
    cfg2 = observables.PointerConfig(g=5e-4, delta_x=0.5, hbar_eff=0.1, t_m=exc.t_star)
    b1 = observables.pointer_bias(traj, cfg1)
    b2 = observables.pointer_bias(traj, cfg2)
    lin = (abs(b1.dX - 2 * b2.dX) <= 1e-15 * max(1.0, abs(b1.dX))
           and abs(b1.dP - 2 * b2.dP) <= 1e-15 * max(1.0, abs(b1.dP)))
    out.append(CheckResult("observables.pointer_linearity", lin, "factor-2 ratio exact"))

    im_part = (1j * (complex(0, exp_real.prob_exponent) -
                     complex(0, exp_real.prob_exponent).conjugate())).real
    out.append(CheckResult("observables.exponent_reality",
                           abs(exp_real.prob_exponent - exp_real.prob_exponent.real) <= 1e-12
                           and im_part == im_part,
                           "probability exponent is real"))
    return out


def oracle_suite() -> list[CheckResult]:
    out = []
    grid = oracle.GridSpec(x_min=-8.0, x_max=8.0, n=512)
    state, rec = oracle.evolve(lambda x: 0.5 * x ** 2, hbar_eff=1.0, t_total=20.0,
                               grid=grid, dt=0.002, absorber=False)
    out.append(CheckResult("oracle.unitarity", state.unitarity_defect <= 1e-10,
                           f"norm drift {state.unitarity_defect:.2e} over 10^4 steps"))

    times = np.linspace(1.0, 400.0, 400)
    gamma = 3.7e-3
    P = np.exp(-gamma * times)
    rate, _ = oracle.fit_decay_rate(times, P, transient_guard=0.0)
    out.append(CheckResult("oracle.synthetic_rate_fit", abs(rate - gamma) / gamma <= 1e-10,
                           f"recovered {rate:.6e} vs {gamma:.6e}"))

    x = grid.x()
    x0 = 1.0
    psi0 = oracle.gaussian_state(x, math.sqrt(0.5), center=x0)
    state, _ = oracle.evolve(lambda xx: 0.5 * xx ** 2, hbar_eff=1.0, t_total=2 * math.pi,
                             grid=grid, dt=2e-4, absorber=False, psi0=psi0)
    mean_x = float(np.sum(x * np.abs(state.psi) ** 2) * grid.dx)
    err = abs(mean_x - x0)
    out.append(CheckResult("oracle.coherent_state_tracking", err <= 1e-6,
                           f"<x> after one period off by {err:.2e}"))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "specfun": specfun_suite,
    "dynamics": dynamics_suite,
    "bvp": bvp_suite,
    "observables": observables_suite,
    "oracle": oracle_suite,
}


def run_suites(modules: list[str] | None = None) -> tuple[list[CheckResult], bool]:
    names = modules or list(SUITES)
    results: list[CheckResult] = []
    for name in names:
        if name not in SUITES:
            raise DomainError(f"unknown module '{name}'; choose from {', '.join(SUITES)}")
        for res in SUITES[name]():
            results.append(res)
    return results, all(r.passed for r in results)


def format_report(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status}  {r.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
