"""Closed-form solutions, their certification, and the pole/zero lattice."""

import cmath
import json
import math

import numpy as np
import pytest

from tunneltraj.dynamics import (CUBIC, QUARTIC, PoleZeroLattice, Potential,
                                 PotentialKind, TrajectoryParams,
                                 early_time_expansion, energy_of_m,
                                 equation_of_motion_residual, exact_solution,
                                 exact_state, integrate_trajectory,
                                 pole_zero_lattice, potential_value,
                                 sample_trajectory, trajectory_to_csv,
                                 trajectory_to_json)
from tunneltraj.errors import DomainError, PoleProximity, PreconditionError, RangeWarning
from tunneltraj.specfun import EllipticContext


# --- potentials ---------------------------------------------------------------

def test_quartic_zero_crossing():
    assert potential_value(QUARTIC, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_quartic_barrier_top():
    assert potential_value(QUARTIC, 1 / math.sqrt(2)) == pytest.approx(0.125, abs=1e-15)
    h = 1e-6
    slope = (QUARTIC.v(1 / math.sqrt(2) + h) - QUARTIC.v(1 / math.sqrt(2) - h)) / (2 * h)
    assert abs(slope) < 1e-9


def test_cubic_turning_point():
    assert potential_value(CUBIC, 1.5) == pytest.approx(0.0, abs=1e-15)
    assert CUBIC.dv(1.0) == pytest.approx(0.0, abs=1e-15)
    assert CUBIC.v(1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_coupling_scale_positive():
    with pytest.raises(DomainError):
        Potential(PotentialKind.QUARTIC, coupling_scale=-1.0)


# --- energy map ---------------------------------------------------------------

def test_energy_maps():
    m = 0.07 + 0.03j
    assert energy_of_m(PotentialKind.QUARTIC, m) == pytest.approx(m / (2 * (1 + m) ** 2))
    # cubic: barrier-top and zero-energy limits
    assert energy_of_m(PotentialKind.CUBIC, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert energy_of_m(PotentialKind.CUBIC, 1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_energy_map_rejection():
    m = 0.1 + 0.05j
    good = energy_of_m(PotentialKind.QUARTIC, m)
    TrajectoryParams(m=m, t0=0.0, E=good, potential=QUARTIC)
    with pytest.raises(DomainError):
        TrajectoryParams(m=m, t0=0.0, E=good + 1e-6, potential=QUARTIC)


# --- closed forms -------------------------------------------------------------

def test_quartic_m_zero_is_reciprocal_sine():
    params = TrajectoryParams.from_m(0.0, 0.0, QUARTIC)
    for t in (-2.5, -1.2, -0.4):
        assert exact_solution(params, t) == pytest.approx(-1.0 / math.sin(t), abs=1e-12)


def test_quartic_m_small_reduction_sup():
    # the analytic m-derivative near the t = -3 endpoint (0.14 from a pole)
    # puts the exact sup at 1.17e-6 for m = 1e-8
    params = TrajectoryParams.from_m(1e-8, 0.0, QUARTIC)
    sup = max(abs(exact_solution(params, t) - (-1.0 / math.sin(t)))
              for t in np.linspace(-3.0, -0.3, 300))
    assert sup <= 1.5e-6


def test_euclidean_bounce():
    # t = -pi/2 - i tau turns the m = 0 solution into 1/cosh(tau)
    params = TrajectoryParams.from_m(0.0, 0.0, QUARTIC)
    for tau in (0.0, 0.7, 2.0):
        t = -math.pi / 2 - 1j * tau
        assert exact_solution(params, t) == pytest.approx(1.0 / math.cosh(tau), abs=1e-12)


def test_closed_form_energy_consistency():
    rng = np.random.default_rng(21)
    for pot in (QUARTIC, CUBIC):
        for _ in range(20):
            m = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4))
            if abs(m) < 1e-3:
                continue
            params = TrajectoryParams.from_m(m, 0.1, pot)
            t = rng.uniform(-6.0, -1.0)
            try:
                x, v = exact_state(params, t)
            except PoleProximity:
                continue
            E = 0.5 * v * v + pot.v(x)
            scale = max(1.0, abs(0.5 * v * v) + abs(pot.v(x)))
            assert abs(E - params.E) / scale <= 1e-12


def test_eom_residual_quartic_m_zero():
    params = TrajectoryParams.from_m(0.0, 0.0, QUARTIC)
    assert abs(equation_of_motion_residual(params, 1.0)) < 1e-10


def test_eom_residual_quartic_complex():
    params = TrajectoryParams.from_m(0.05 + 0.02j, 0.0, QUARTIC)
    assert abs(equation_of_motion_residual(params, -5.0)) < 1e-8


def test_eom_residual_cubic():
    params = TrajectoryParams.from_m(0.2, 0.0, CUBIC)
    assert abs(equation_of_motion_residual(params, 2.5)) < 1e-8
    params = TrajectoryParams.from_m(0.1j, 0.0, CUBIC)
    assert abs(equation_of_motion_residual(params, -3.0)) < 1e-9


def test_eom_residual_random_sample():
    # the stencil's roundoff floor scales like |x|/h^2, so certification at
    # 1e-8 needs order-unity pole clearance (see equation_of_motion_residual)
    from tunneltraj.dynamics import nearest_pole_distance
    rng = np.random.default_rng(22)
    for pot in (QUARTIC, CUBIC):
        checked = 0
        while checked < 100:
            m = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4))
            if abs(m) < 1e-3:
                continue
            params = TrajectoryParams.from_m(m, 0.0, pot)
            t = rng.uniform(-8.0, -0.5)
            if nearest_pole_distance(params, t) < 1.5:
                continue
            res = equation_of_motion_residual(params, t)
            assert abs(res) <= 1e-8
            checked += 1


def test_exact_state_pole_signal():
    params = TrajectoryParams.from_m(0.1 + 0.05j, 0.0, QUARTIC)
    with pytest.raises(PoleProximity) as info:
        exact_state(params, params.t0 + 1e-9)
    assert info.value.order == 1
    assert abs(info.value.pole - params.t0) < 1e-6


# --- numerical integration ----------------------------------------------------

def test_integrate_known_solution():
    params = TrajectoryParams.from_m(0.0, 0.0, QUARTIC)
    x0, v0 = exact_state(params, -3.0)
    traj = integrate_trajectory(params, (-3.0, -1.0), x0, v0)
    assert abs(traj.x[-1] - exact_solution(params, -1.0)) <= 1e-8
    assert not traj.runaway


def test_integrate_fig1_window():
    from tunneltraj.bvp import BoundaryData, solve_tunneling
    report, _ = solve_tunneling(QUARTIC, BoundaryData(t_i=-30.0, t_f=0.0))
    params = report.params
    x0, v0 = exact_state(params, -30.0)
    traj = integrate_trajectory(params, (-30.0, -0.5), x0, v0)
    assert abs(traj.x[-1] - exact_solution(params, traj.t[-1])) <= 1e-6


def test_integrate_fig3_window():
    from tunneltraj.bvp import BoundaryData, solve_tunneling
    report, _ = solve_tunneling(CUBIC, BoundaryData(t_i=-30.0, t_f=0.0))
    params = report.params
    x0, v0 = exact_state(params, -30.0)
    traj = integrate_trajectory(params, (-30.0, -0.5), x0, v0)
    assert abs(traj.x[-1] - exact_solution(params, traj.t[-1])) <= 1e-6


def test_integrate_energy_conservation():
    params = TrajectoryParams.from_m(0.05 + 0.02j, 0.0, QUARTIC)
    x0, v0 = exact_state(params, -6.0)
    traj = integrate_trajectory(params, (-6.0, -1.0), x0, v0)
    assert traj.max_energy_defect() <= 1e-8


def test_integrate_rejects_bad_energy():
    params = TrajectoryParams.from_m(0.05, 0.0, QUARTIC)
    x0, v0 = exact_state(params, -4.0)
    with pytest.raises(PreconditionError):
        integrate_trajectory(params, (-4.0, -1.0), x0, v0 + 1e-4)


def test_integrate_runaway_flag():
    params = TrajectoryParams.from_m(0.05 + 0.02j, 0.0, QUARTIC)
    x0, v0 = exact_state(params, -2.0)
    traj = integrate_trajectory(params, (-2.0, 0.5), x0, v0)
    assert traj.runaway
    assert abs(traj.x[-1]) == pytest.approx(1e3, rel=1e-6)


# --- early-time expansion -----------------------------------------------------

def test_early_time_quartic_leading():
    x = early_time_expansion(PotentialKind.QUARTIC, 0.0, 10j)
    # 2i/Z + 2i/Z^3 with Z = 10i: 0.2 - 0.002
    assert x == pytest.approx(0.198, abs=1e-12)


def test_early_time_quartic_fig1():
    # at the T = 30 solution parameters the neglected terms are O(|m|^(1/2)) ~ 0.24
    from tunneltraj.bvp import BoundaryData, solve_tunneling
    report, _ = solve_tunneling(QUARTIC, BoundaryData(t_i=-30.0, t_f=0.0))
    m = report.params.m
    ctx = report.params.ctx
    A = math.pi / (2 * ctx.K * cmath.sqrt(1 + m))
    t = -25.0
    Z = cmath.exp(1j * A * (report.params.t0 - t))
    approx = early_time_expansion(PotentialKind.QUARTIC, m, Z)
    exact = exact_solution(report.params, t)
    assert abs(approx - exact) / abs(exact) <= 0.1  # measured 4.8e-2


def test_early_time_cubic():
    m = 1e-2
    ctx = EllipticContext.from_parameter(m)
    g = cmath.sqrt(1 + m * (m - 1))
    C = 1 / (2 * cmath.sqrt(g))
    Z = 8.0
    U = -1j * cmath.log(Z)
    t = -U / (math.pi / (2 * ctx.K) * C)
    approx = early_time_expansion(PotentialKind.CUBIC, m, Z)
    exact = exact_solution(TrajectoryParams.from_m(m, 0.0, CUBIC), t)
    assert abs(approx - exact) / abs(exact) <= 5e-2


def test_early_time_range_warning():
    with pytest.warns(RangeWarning):
        early_time_expansion(PotentialKind.QUARTIC, 0.3, 10j)


# --- pole/zero lattice --------------------------------------------------------

def test_lattice_fig2_rows():
    # m = i/10, t0 = 0: poles on a near-horizontal row through the origin,
    # zeros on a near-horizontal row at height Im(b)
    params = TrajectoryParams.from_m(0.1j, 0.0, QUARTIC)
    lat = pole_zero_lattice(params, (-12 - 1j, 2 + 4j))
    assert lat.pole_order == 1
    row0 = [p for p in lat.poles if abs(p.imag) < 1.0]
    row1 = [z for z in lat.zeros if 0.5 < z.imag < 4.0]
    assert len(row0) >= 3 and len(row1) >= 3
    # rows tilt by Im(a) per cell but stay nearly horizontal
    assert max(abs(p.imag) for p in row0) < 1.0
    spacings = np.diff(sorted(p.real for p in row0))
    assert np.allclose(spacings, lat.side_a.real, atol=0.2)


def test_lattice_m_to_zero_spacing():
    params = TrajectoryParams.from_m(1e-10, 0.0, QUARTIC)
    lat = pole_zero_lattice(params, (-7 - 0.5j, 1 + 0.5j))
    spac = np.diff(sorted(p.real for p in lat.poles))
    assert np.allclose(spac, math.pi, atol=1e-6)


def test_lattice_pole_and_zero_magnitudes():
    params = TrajectoryParams.from_m(0.1j, 0.0, QUARTIC)
    lat = pole_zero_lattice(params, (-12 - 1j, 2 + 4j))
    for p in lat.poles:
        assert abs(exact_solution(params, p + 1e-2)) > 50
    for z in lat.zeros:
        assert abs(exact_solution(params, z)) < 1e-6


def test_lattice_fig1_nearest_pole():
    from tunneltraj.bvp import BoundaryData, solve_tunneling
    report, _ = solve_tunneling(QUARTIC, BoundaryData(t_i=-30.0, t_f=0.0))
    lat = pole_zero_lattice(report.params, (-5 - 1.5j, -1 + 0.5j))
    nearest = max(lat.poles, key=lambda p: p.real)
    assert abs(nearest - (-math.pi)) < 0.5
    assert 0 < abs(nearest.imag) < 3 * abs(report.params.m)


def test_lattice_cubic_order():
    params = TrajectoryParams.from_m(0.1j, 0.0, CUBIC)
    lat = pole_zero_lattice(params, (-14 - 1j, 2 + 6j))
    assert lat.pole_order == 2
    A = 0.5 * (1 - (1 + params.m) / cmath.sqrt(1 + params.m * (params.m - 1)))
    for z in lat.zeros:
        assert abs(exact_solution(params, z) - A) < 1e-6
    for p in lat.poles:
        assert abs(exact_solution(params, p + 1e-2)) > 50


def test_lattice_rejects_infinite_rect():
    params = TrajectoryParams.from_m(0.1j, 0.0, QUARTIC)
    with pytest.raises(DomainError):
        pole_zero_lattice(params, (complex("inf"), 1 + 1j))


# --- trajectory export --------------------------------------------------------

def test_trajectory_csv_schema():
    params = TrajectoryParams.from_m(0.05 + 0.02j, 0.0, QUARTIC)
    traj = sample_trajectory(params, -4.0, -1.0, 11)
    text = trajectory_to_csv(traj)
    lines = text.strip().split("\n")
    assert lines[0] == "t,re_x,im_x,re_v,im_v,re_E,im_E"
    assert len(lines) == 12
    first = lines[1].split(",")
    assert len(first) == 7
    assert first[0] == f"{-4.0:.11e}"


def test_trajectory_json_matches_csv():
    params = TrajectoryParams.from_m(0.05 + 0.02j, 0.0, QUARTIC)
    traj = sample_trajectory(params, -4.0, -1.0, 5)
    rows = json.loads(trajectory_to_json(traj))
    assert len(rows) == 5
    csv_first = trajectory_to_csv(traj).strip().split("\n")[1].split(",")
    assert rows[0]["re_x"] == float(csv_first[1])


def test_trajectory_monotone_times_required():
    params = TrajectoryParams.from_m(0.05, 0.0, QUARTIC)
    traj = sample_trajectory(params, -4.0, -1.0, 5)
    from tunneltraj.dynamics import Trajectory
    with pytest.raises(DomainError):
        Trajectory(t=traj.t[::-1], x=traj.x, v=traj.v, params=params, window=(-4, -1))
