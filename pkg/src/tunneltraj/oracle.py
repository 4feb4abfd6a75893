"""Independent exact-quantum oracle: split-operator evolution and rate sweeps.

Strang-split spectral evolution of the Gaussian initial state, with a
polynomial-ramp absorbing layer on the escape side(s).  Escape rates are
fitted from the survival curve and their ln-slope against 1/hbar_eff is
compared with the semiclassical exponent (-2/3 quartic, -6/5 cubic).

Multiple hbar_eff values evolve as rows of one array so a sweep costs one
run.  The initial width is tied to hbar_eff as the false-vacuum ground
state, L^2 = hbar_eff/2, unless overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import Potential, PotentialKind
from .errors import DomainError, PreconditionError, ResolutionError

_TRANSIENT_GUARD = 30.0


@dataclass(frozen=True)
class GridSpec:
    """Spatial grid with an absorbing layer on the outer fraction."""

    x_min: float
    x_max: float
    n: int
    absorber_frac: float = 0.15
    absorber_strength: float = 2.0
    absorber_power: int = 4
    two_sided: bool = False

    def __post_init__(self):
        if self.n & (self.n - 1):
            raise DomainError("grid size must be a power of two")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def absorber(self) -> np.ndarray:
        x = self.x()
        width = self.absorber_frac * (self.x_max - self.x_min)
        W = self.absorber_strength * np.clip(
            (x - (self.x_max - width)) / width, 0.0, 1.0) ** self.absorber_power
        if self.two_sided:
            W = W + self.absorber_strength * np.clip(
                ((self.x_min + width) - x) / width, 0.0, 1.0) ** self.absorber_power
        return W


def default_grid(potential: Potential, hbar_min: float) -> GridSpec:
    """A grid honoring the de Broglie resolution rule dx <= hbar/(4 p_max)."""
    if potential.kind == PotentialKind.QUARTIC:
        x_min, x_max, two_sided = -2.6, 2.6, True
    else:
        x_min, x_max, two_sided = -2.2, 3.4, False
    v_min = min(potential.v(x_min), potential.v(x_max))
    p_max = math.sqrt(2.0 * (potential.barrier_height - v_min))
    dx_bound = hbar_min / (4.0 * p_max)
    n = 1
    while (x_max - x_min) / n > dx_bound:
        n *= 2
    return GridSpec(x_min=x_min, x_max=x_max, n=n, two_sided=two_sided)


def _resolution_check(grid: GridSpec, potential, hbar_min: float) -> None:
    if not callable(potential):
        v_min = min(float(np.min(potential.v(grid.x()))), 0.0)
        e_top = potential.barrier_height
    else:
        v_min = float(np.min(potential(grid.x())))
        e_top = max(0.0, -v_min * 0.0)
    p_max = math.sqrt(max(2.0 * (e_top - v_min), hbar_min))
    bound = hbar_min / (4.0 * p_max)
    if grid.dx > bound * (1.0 + 1e-12):
        need = 1 << int(math.ceil(math.log2((grid.x_max - grid.x_min) / bound)))
        raise ResolutionError(
            f"dx = {grid.dx:.3e} violates dx <= hbar/(4 p_max) = {bound:.3e}; "
            f"suggest n = {need}")


@dataclass
class GridState:
    """Final state and bookkeeping of one evolution run."""

    grid: GridSpec
    hbar_eff: float
    psi: np.ndarray
    norm: float
    energy_drift: float
    unitarity_defect: float


@dataclass
class EscapeRecord:
    """Survival history and the rate fitted from it."""

    times: np.ndarray
    survival: np.ndarray
    norm: np.ndarray
    fitted_rate: float
    fit_window: tuple[float, float]


def gaussian_state(x: np.ndarray, L: float, center: float = 0.0) -> np.ndarray:
    psi = np.exp(-(x - center) ** 2 / (4.0 * L * L)).astype(np.complex128)
    dx = x[1] - x[0]
    psi /= math.sqrt(float(np.sum(np.abs(psi) ** 2) * dx))
    return psi


def _well_mask(potential, x: np.ndarray) -> np.ndarray:
    # survival region: inside the barrier top; both sides for the symmetric quartic
    if callable(potential):
        return np.ones_like(x, dtype=bool)
    if potential.kind == PotentialKind.QUARTIC:
        return np.abs(x) < potential.barrier_top
    return x < potential.barrier_top


def _evolve_batch(potential, hbars: np.ndarray, grid: GridSpec, dt: float,
                  t_total: float, record_every: int, absorber: bool,
                  psi0: np.ndarray | None = None):
    x = grid.x()
    dx = grid.dx
    k = 2.0 * math.pi * np.fft.fftfreq(grid.n, d=dx)
    Vx = potential(x) if callable(potential) else potential.v(x)
    W = grid.absorber() if absorber else np.zeros_like(x)
    if psi0 is None:
        psi = np.stack([gaussian_state(x, math.sqrt(h / 2.0)) for h in hbars])
    else:
        psi = np.array(psi0, dtype=np.complex128, copy=True)
        if psi.ndim == 1:
            psi = np.tile(psi, (len(hbars), 1))
    expV_half = np.exp(-0.5j * dt * (Vx[None, :] - 1j * W[None, :]) / hbars[:, None])
    expK = np.exp(-0.5j * dt * hbars[:, None] * k[None, :] ** 2)
    mask = _well_mask(potential, x)
    n_steps = int(round(t_total / dt))
    times, surv, norms = [], [], []
    for step in range(n_steps):
        psi *= expV_half
        psi = np.fft.ifft(np.fft.fft(psi, axis=1) * expK, axis=1)
        psi *= expV_half
        if (step + 1) % record_every == 0 or step == n_steps - 1:
            times.append((step + 1) * dt)
            prob = np.abs(psi) ** 2
            surv.append(prob[:, mask].sum(axis=1) * dx)
            norms.append(prob.sum(axis=1) * dx)
    return np.asarray(times), np.asarray(surv), np.asarray(norms), psi, x, k


def fit_decay_rate(times: np.ndarray, survival: np.ndarray,
                   transient_guard: float = _TRANSIENT_GUARD) -> tuple[float, tuple[float, float]]:
    """Least-squares slope of ln P over the decay window.

    Window runs from the later of the first drop below 0.999 and the
    transient guard, until P reaches 0.5 (or the end of the record).  Deeply
    suppressed runs whose survival stays above 0.98 use the second half of
    the record so the initial transient is excluded.
    """
    times = np.asarray(times, float)
    P = np.asarray(survival, float)
    if np.any(P <= 0):
        raise DomainError("survival must be positive for a log fit")
    below999 = np.nonzero(P < 0.999)[0]
    t_lo = times[below999[0]] if len(below999) else times[0]
    t_lo = max(t_lo, transient_guard)
    if P[-1] > 0.98:
        t_lo = max(t_lo, 0.5 * times[-1])
    lo = int(np.searchsorted(times, t_lo))
    below_half = np.nonzero(P < 0.5)[0]
    hi = int(below_half[0]) if len(below_half) else len(P)
    if hi - lo < 10:
        lo = max(0, hi - max(10, hi // 3))
    tt, pp = times[lo:hi], np.log(P[lo:hi])
    if len(tt) < 4:
        raise PreconditionError("survival record too short for a rate fit")
    A = np.vstack([tt, np.ones_like(tt)]).T
    (slope, _), *_ = np.linalg.lstsq(A, pp, rcond=None)
    return float(-slope), (float(tt[0]), float(tt[-1]))


def evolve(potential, hbar_eff: float, t_total: float, grid: GridSpec | None = None,
           dt: float = 0.005, L: float | None = None, record_every: int = 50,
           absorber: bool = True, psi0: np.ndarray | None = None) -> tuple[GridState, EscapeRecord]:
    """Evolve the Gaussian initial state and record the survival probability.

    Symmetric split-step (kinetic in momentum space, potential in position
    space).  With the absorber disabled, norm conservation is tracked and
    the run is unitary to machine precision per step; energy-expectation
    drift beyond 1e-4 raises a ResolutionError.

    `potential` is a Potential or any callable V(x) (used by the harmonic
    reference tests).
    """
    if grid is None:
        if callable(potential):
            raise DomainError("a GridSpec is required for callable potentials")
        grid = default_grid(potential, hbar_eff)
    _resolution_check(grid, potential, hbar_eff)
    hbars = np.array([hbar_eff], float)
    if psi0 is None and L is not None:
        psi0 = gaussian_state(grid.x(), L)
    times, surv, norms, psi, x, k = _evolve_batch(
        potential, hbars, grid, dt, t_total, record_every, absorber, psi0)

    unit_defect = float(np.max(np.abs(norms[:, 0] - norms[0, 0]))) if not absorber else math.nan
    energy_drift = math.nan
    if not absorber:
        Vx = potential(x) if callable(potential) else potential.v(x)

        def energy_of(p):
            dxl = x[1] - x[0]
            pk = np.fft.fft(p)
            kin = hbar_eff ** 2 * np.sum(k ** 2 * np.abs(pk) ** 2) / np.sum(np.abs(pk) ** 2) / 2.0
            pot = float(np.sum(Vx * np.abs(p) ** 2) * dxl)
            return kin + pot

        e0 = energy_of(gaussian_state(x, math.sqrt(hbar_eff / 2.0)) if psi0 is None else psi0)
        e1 = energy_of(psi[0])
        energy_drift = abs(e1 - e0) / max(abs(e0), 1e-12)
        if energy_drift > 1e-4:
            raise ResolutionError(f"energy expectation drifted by {energy_drift:.2e}")

    try:
        rate, window = fit_decay_rate(times, surv[:, 0])
    except (DomainError, PreconditionError):
        rate, window = math.nan, (math.nan, math.nan)
    state = GridState(grid=grid, hbar_eff=hbar_eff, psi=psi[0],
                      norm=float(norms[-1, 0]), energy_drift=energy_drift,
                      unitarity_defect=unit_defect)
    record = EscapeRecord(times=times, survival=surv[:, 0], norm=norms[:, 0],
                          fitted_rate=rate, fit_window=window)
    return state, record


@dataclass
class SweepResult:
    """Rates across an hbar_eff sweep and the fitted exponent slope."""

    hbar_list: list[float]
    rates: list[float]
    slope: float
    target: float
    rel_error: float
    records: list[EscapeRecord] = field(repr=False, default_factory=list)

    def to_json_dict(self) -> dict:
        return {"hbarEffList": self.hbar_list, "rates": self.rates,
                "slope": self.slope, "target": self.target, "relError": self.rel_error}


def exponent_sweep(potential: Potential, hbar_list: Sequence[float],
                   grid: GridSpec | None = None, dt: float = 0.005,
                   t_total: float | None = None, record_every: int = 50) -> SweepResult:
    """ln-rate slope against 1/hbar_eff across a sweep, vs the Euclidean exponent.

    All hbar_eff values evolve simultaneously as rows of one array.  The
    target slope is -2/3 for the quartic and -6/5 for the cubic (quadrature
    value of -2 int sqrt(2V) dx over the barrier).
    """
    hbar_list = list(hbar_list)
    if len(hbar_list) < 4:
        raise PreconditionError("at least 4 hbar_eff values are required")
    hbars = np.asarray(hbar_list, float)
    if grid is None:
        grid = default_grid(potential, float(hbars.min()))
    _resolution_check(grid, potential, float(hbars.min()))
    if t_total is None:
        t_total = 500.0 if potential.kind == PotentialKind.QUARTIC else 3000.0
    times, surv, norms, _, _, _ = _evolve_batch(
        potential, hbars, grid, dt, t_total, record_every, absorber=True)

    rates, records = [], []
    for i in range(len(hbars)):
        rate, window = fit_decay_rate(times, surv[:, i])
        rates.append(rate)
        records.append(EscapeRecord(times=times, survival=surv[:, i], norm=norms[:, i],
                                    fitted_rate=rate, fit_window=window))
    rates_arr = np.asarray(rates)
    if np.any(~np.isfinite(rates_arr)) or np.any(rates_arr <= 0):
        raise PreconditionError("non-exponential survival: transient-dominated record")

    x1 = 1.0 / hbars
    A = np.vstack([x1, np.ones_like(x1)]).T
    (slope, _), *_ = np.linalg.lstsq(A, np.log(rates_arr), rcond=None)
    target = -2.0 / 3.0 if potential.kind == PotentialKind.QUARTIC else -6.0 / 5.0
    rel = abs(slope - target) / abs(target)
    return SweepResult(hbar_list=hbar_list, rates=[float(r) for r in rates_arr],
                       slope=float(slope), target=target, rel_error=float(rel),
                       records=records)


def survival_csv(record: EscapeRecord) -> str:
    """Survival-curve CSV: (t, P_survive, norm), 12 significant digits."""
    lines = ["t,P_survive,norm"]
    for t, p, n in zip(record.times, record.survival, record.norm):
        lines.append(f"{t:.11e},{p:.11e},{n:.11e}")
    return "\n".join(lines) + "\n"
