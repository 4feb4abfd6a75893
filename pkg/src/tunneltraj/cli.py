"""Command-line surface: solve, figure, scan, pointer, oracle, validate.

Configuration comes from an INI-style file (flat key = value under a
section per command) with full command-line override.  Output files use
fixed 12-significant-digit formatting and carry no timestamps, so repeated
runs are byte-identical.  The output directory is the --outdir flag, else
the TUNNELTRAJ_OUTDIR environment variable, else the working directory.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bvp, dynamics, observables, oracle, validate
from .bvp import BoundaryData
from .dynamics import Potential, PotentialKind
from .errors import ContourError, ConvergenceError, DomainError, PreconditionError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_VALIDATE_FAIL = 3

_ENV_OUTDIR = "TUNNELTRAJ_OUTDIR"

_KNOWN_KEYS = {
    "solve": {"potential", "t_i", "t_f", "x_f", "l", "branch", "coupling_scale",
              "samples", "emit"},
    "figure": {"potential", "t_i", "t_f", "x_f", "l", "branch", "which",
               "m_re", "m_im", "t0", "rect"},
    "scan": {"potential", "t_list", "l", "branch"},
    "pointer": {"potential", "t_i", "t_f", "x_f", "l", "branch", "g", "delta_x",
                "hbar_eff", "tm_grid"},
    "oracle": {"potential", "hbar_list", "t_total", "dt", "grid_n"},
    "validate": {"modules"},
}


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def _round12(x: float) -> float:
    return float(_fmt(x))


def _json_dump(obj) -> str:
    def walk(o):
        if isinstance(o, float):
            return _round12(o)
        if isinstance(o, dict):
            return {k: walk(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [walk(v) for v in o]
        return o
    return json.dumps(walk(obj), indent=1) + "\n"


def _load_config(path: str | None, section: str) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file '{path}' not found")
    if section not in parser:
        return {}
    data = dict(parser[section])
    unknown = set(data) - _KNOWN_KEYS[section]
    if unknown:
        raise ConfigError(f"unknown config key '{sorted(unknown)[0]}' in [{section}]")
    return data


def _potential(name: str, coupling_scale: float = 1.0) -> Potential:
    try:
        kind = PotentialKind(name.lower())
    except ValueError:
        raise ConfigError(f"potential must be quartic or cubic, got '{name}'") from None
    return Potential(kind, coupling_scale)


def _parse_xf(text: str) -> complex:
    if text.lower() in ("inf", "infinity"):
        return bvp.INFINITY
    try:
        return complex(text)
    except ValueError:
        raise ConfigError(f"x_f must be 'inf' or a complex number, got '{text}'") from None


def _boundary(args, cfg) -> BoundaryData:
    t_i = float(cfg.get("t_i", args.ti if args.ti is not None else -30.0))
    t_f = float(cfg.get("t_f", args.tf if args.tf is not None else 0.0))
    x_f = _parse_xf(str(cfg.get("x_f", args.xf if args.xf is not None else "inf")))
    L = float(cfg.get("l", args.L if args.L is not None else 1.0 / math.sqrt(2.0)))
    if t_f <= t_i:
        raise ConfigError("t_f must exceed t_i")
    if L <= 0:
        raise ConfigError("L must be positive")
    try:
        return BoundaryData(t_i=t_i, t_f=t_f, x_f=x_f, L=L)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _outdir(args) -> Path:
    d = args.outdir or os.environ.get(_ENV_OUTDIR) or "."
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_solve(args) -> int:
    cfg = _load_config(args.config, "solve")
    potential = _potential(cfg.get("potential", args.potential),
                           float(cfg.get("coupling_scale", args.coupling_scale)))
    boundary = _boundary(args, cfg)
    branch = int(cfg.get("branch", args.branch))
    n_samples = int(cfg.get("samples", args.samples))
    emit = str(cfg.get("emit", args.emit)).split(",")

    out = _outdir(args)
    report, traj = bvp.solve_tunneling(potential, boundary, branch=branch,
                                       n_samples=n_samples)
    (out / "solve_report.json").write_text(_json_dump(report.to_json_dict(boundary)))
    if "csv" in emit:
        (out / "trajectory.csv").write_text(dynamics.trajectory_to_csv(traj))
    if "json" in emit:
        (out / "trajectory.json").write_text(dynamics.trajectory_to_json(traj) + "\n")
    E = report.params.E
    print(f"converged={report.converged} iterations={report.iterations} "
          f"E={_fmt(E.real)}{'+' if E.imag >= 0 else '-'}{_fmt(abs(E.imag))}i "
          f"residual={_fmt(report.residual.max_abs)}")
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_figure(args) -> int:
    cfg = _load_config(args.config, "figure")
    which = cfg.get("which", args.which)
    if which not in ("fig1", "fig2", "fig3"):
        raise ConfigError(f"which must be fig1|fig2|fig3, got '{which}'")
    out = _outdir(args)

    if which in ("fig1", "fig3"):
        name = "quartic" if which == "fig1" else "cubic"
        potential = _potential(cfg.get("potential", name))
        boundary = _boundary(args, cfg)
        report, traj = bvp.solve_tunneling(potential, boundary,
                                           branch=int(cfg.get("branch", args.branch)))
        if not report.converged:
            print("solve did not converge", file=sys.stderr)
            return EXIT_NO_CONVERGENCE
        lines = ["re_x,im_x"]
        for x in traj.x:
            lines.append(f"{_fmt(x.real)},{_fmt(x.imag)}")
        (out / f"{which}_trajectory.csv").write_text("\n".join(lines) + "\n")
        print(f"{which}: {len(traj.x)} points, E={_fmt(report.params.E.real)}"
              f"{'+' if report.params.E.imag >= 0 else '-'}{_fmt(abs(report.params.E.imag))}i")
        return EXIT_OK

    # fig2: pole/zero lattice
    m_re = cfg.get("m_re", args.m_re)
    m_im = cfg.get("m_im", args.m_im)
    if m_re is not None or m_im is not None:
        m = complex(float(m_re or 0.0), float(m_im or 0.0))
        t0 = complex(float(cfg.get("t0", args.t0 or 0.0)))
        potential = _potential(cfg.get("potential", args.potential))
        params = dynamics.TrajectoryParams.from_m(m, t0, potential)
    else:
        potential = _potential(cfg.get("potential", args.potential))
        boundary = _boundary(args, cfg)
        report, _ = bvp.solve_tunneling(potential, boundary,
                                        branch=int(cfg.get("branch", args.branch)))
        if not report.converged:
            return EXIT_NO_CONVERGENCE
        params = report.params
    rect_text = cfg.get("rect", args.rect) or "-16,-1,2,4"
    try:
        r0, i0, r1, i1 = (float(v) for v in rect_text.split(","))
    except ValueError:
        raise ConfigError(f"rect must be 're0,im0,re1,im1', got '{rect_text}'") from None
    lat = dynamics.pole_zero_lattice(params, (complex(r0, i0), complex(r1, i1)))
    lines = ["role,re_t,im_t"]
    for p in lat.poles:
        lines.append(f"pole,{_fmt(p.real)},{_fmt(p.imag)}")
    for z in lat.zeros:
        lines.append(f"zero,{_fmt(z.real)},{_fmt(z.imag)}")
    (out / "fig2_lattice.csv").write_text("\n".join(lines) + "\n")
    print(f"fig2: {len(lat.poles)} poles, {len(lat.zeros)} zeros, pole order {lat.pole_order}")
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _load_config(args.config, "scan")
    potential = _potential(cfg.get("potential", args.potential))
    t_text = cfg.get("t_list", args.T_list)
    if not t_text:
        raise ConfigError("t_list must be a nonempty comma-separated list of durations")
    try:
        t_values = [float(v) for v in str(t_text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad t_list entry in '{t_text}'") from None
    if not t_values:
        raise ConfigError("t_list must be nonempty")
    L = float(cfg.get("l", args.L if args.L is not None else 1.0 / math.sqrt(2.0)))
    branch = int(cfg.get("branch", args.branch))

    out = _outdir(args)
    lines = ["T,status,re_eps,im_eps,re_E,im_E,prob_exponent,peak_im_x,lead_time,scaled_peak"]
    for T in t_values:
        boundary = BoundaryData(t_i=-T, t_f=0.0, L=L)
        try:
            report, traj = bvp.solve_tunneling(potential, boundary, branch=branch)
            exp = observables.action_exponent_real_time(traj, boundary)
            exc = observables.imag_excursion(traj, epsilon=report.seed_epsilon)
            eps, E = report.seed_epsilon, report.params.E
            peak = abs(exc.peak_im.imag)
            if potential.kind == PotentialKind.QUARTIC:
                scaled = peak * abs(eps)
            else:
                scaled = peak * abs(eps) ** 2
            lines.append(",".join([f"{T:g}", "ok", _fmt(eps.real), _fmt(eps.imag),
                                   _fmt(E.real), _fmt(E.imag), _fmt(exp.prob_exponent),
                                   _fmt(peak), _fmt(exc.lead_time), _fmt(scaled)]))
        except (ConvergenceError, DomainError, PreconditionError, ContourError) as exc_err:
            lines.append(f"{T:g},failed:{type(exc_err).__name__},,,,,,,,")
    (out / "scan.csv").write_text("\n".join(lines) + "\n")
    print(f"scan: {len(t_values)} rows written")
    return EXIT_OK


def cmd_pointer(args) -> int:
    cfg = _load_config(args.config, "pointer")
    potential = _potential(cfg.get("potential", args.potential))
    boundary = _boundary(args, cfg)
    g = float(cfg.get("g", args.g))
    delta_x = float(cfg.get("delta_x", args.delta_x))
    hbar_eff = float(cfg.get("hbar_eff", args.hbar_eff))
    grid_text = str(cfg.get("tm_grid", args.tm_grid))
    try:
        start, stop, count = grid_text.split(",")
        tm_values = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise ConfigError(f"tm_grid must be 'start,stop,count', got '{grid_text}'") from None

    out = _outdir(args)
    report, traj = bvp.solve_tunneling(potential, boundary,
                                       branch=int(cfg.get("branch", args.branch)))
    if not report.converged:
        return EXIT_NO_CONVERGENCE
    rows, lines = [], ["t_m,dX,dP"]
    for t_m in tm_values:
        if not (traj.t[0] <= t_m <= traj.t[-1]):
            continue
        config = observables.PointerConfig(g=g, delta_x=delta_x, hbar_eff=hbar_eff, t_m=float(t_m))
        bias = observables.pointer_bias(traj, config)
        rows.append(bias.to_json_dict(config))
        lines.append(f"{_fmt(t_m)},{_fmt(bias.dX)},{_fmt(bias.dP)}")
    (out / "pointer.csv").write_text("\n".join(lines) + "\n")
    (out / "pointer.json").write_text(_json_dump(rows))
    print(f"pointer: {len(rows)} rows written")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load_config(args.config, "oracle")
    potential = _potential(cfg.get("potential", args.potential))
    hbar_text = str(cfg.get("hbar_list", args.hbar_list or ""))
    hbar_list = [float(v) for v in hbar_text.split(",") if v.strip()]
    if not hbar_list:
        raise ConfigError("hbar_list must be a nonempty comma-separated list")
    if len(hbar_list) < 4:
        raise ConfigError("hbar_list needs at least 4 values")
    dt = float(cfg.get("dt", args.dt))
    t_total = cfg.get("t_total", args.t_total)
    t_total = float(t_total) if t_total is not None else None
    grid = None
    grid_n = cfg.get("grid_n", args.grid_n)
    if grid_n is not None:
        base = oracle.default_grid(potential, min(hbar_list))
        grid = oracle.GridSpec(x_min=base.x_min, x_max=base.x_max, n=int(grid_n),
                               two_sided=base.two_sided)

    out = _outdir(args)
    try:
        sweep = oracle.exponent_sweep(potential, hbar_list, grid=grid, dt=dt, t_total=t_total)
    except oracle.ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for hb, rec in zip(sweep.hbar_list, sweep.records):
        (out / f"survival_hbar{hb:g}.csv").write_text(oracle.survival_csv(rec))
    (out / "sweep_summary.json").write_text(_json_dump(sweep.to_json_dict()))
    print(f"oracle: slope={_fmt(sweep.slope)} target={_fmt(sweep.target)} "
          f"rel_error={_fmt(sweep.rel_error)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_config(args.config, "validate")
    modules = args.modules or None
    if not modules and cfg.get("modules"):
        modules = [v.strip() for v in cfg["modules"].split(",")]
    results, all_pass = validate.run_suites(modules)
    report = validate.format_report(results)
    sys.stdout.write(report)
    out = _outdir(args)
    (out / "validate_report.txt").write_text(report)
    return EXIT_OK if all_pass else EXIT_VALIDATE_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunneltraj",
        description="Complex classical trajectories for post-selected quantum tunneling.")
    parser.add_argument("--config", help="INI config file; flags override it")
    parser.add_argument("--outdir", help=f"output directory (or ${_ENV_OUTDIR})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_solve_opts(p):
        p.add_argument("--potential", default="quartic")
        p.add_argument("--ti", type=float, default=None)
        p.add_argument("--tf", type=float, default=None)
        p.add_argument("--xf", default=None, help="'inf' or a complex number")
        p.add_argument("--L", type=float, default=None)
        p.add_argument("--branch", type=int, default=0)

    p = sub.add_parser("solve", help="solve the tunneling boundary value problem")
    add_solve_opts(p)
    p.add_argument("--coupling-scale", dest="coupling_scale", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=4001)
    p.add_argument("--emit", default="csv,json", help="comma list: csv,json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("figure", help="emit figure-ready data files")
    add_solve_opts(p)
    p.add_argument("--which", default="fig1", choices=("fig1", "fig2", "fig3"))
    p.add_argument("--m-re", dest="m_re", default=None)
    p.add_argument("--m-im", dest="m_im", default=None)
    p.add_argument("--t0", default=None)
    p.add_argument("--rect", default=None, help="re0,im0,re1,im1")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("scan", help="sweep post-selected durations")
    p.add_argument("--potential", default="quartic")
    p.add_argument("--T-list", dest="T_list", default=None, help="comma list of durations")
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--branch", type=int, default=0)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("pointer", help="weak-measurement pointer biases over a time grid")
    add_solve_opts(p)
    p.add_argument("--g", type=float, default=1e-3)
    p.add_argument("--delta-x", dest="delta_x", type=float, default=0.5)
    p.add_argument("--hbar-eff", dest="hbar_eff", type=float, default=0.1)
    p.add_argument("--tm-grid", dest="tm_grid", default="-29,-1,57")
    p.set_defaults(func=cmd_pointer)

    p = sub.add_parser("oracle", help="split-operator escape-rate sweep")
    p.add_argument("--potential", default="quartic")
    p.add_argument("--hbar-list", dest="hbar_list",
                   default="0.06,0.08,0.10,0.12")
    p.add_argument("--t-total", dest="t_total", default=None)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--grid-n", dest="grid_n", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="run the module invariant suites")
    p.add_argument("modules", nargs="*", help="subset of modules to validate")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, PreconditionError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
