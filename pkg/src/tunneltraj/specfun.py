"""Complex-parameter special functions.

Complete elliptic integrals via the complex arithmetic-geometric mean,
the Jacobi elliptic sine through descending Landen transformations, its
reciprocal as a trigonometric (Lambert-type) series in the nome, and a
branch-indexed Lambert W.

Conventions (stated once, used everywhere):

* principal logarithm and principal square root throughout;
* the elliptic parameter plane is cut along the real ray [1, inf);
* K' means K(1 - m) with 1 - m on its principal branch;
* the nome is q = exp(-pi K'/K).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConditioningWarning, ConvergenceError, DomainError, PoleProximity, RangeWarning

_BRANCH_CUT_TOL = 1e-14
_POLE_GUARD = 1e-6
_LANDEN_FLOOR = 1e-12
_MAX_LANDEN = 64


def _check_parameter(m: complex) -> complex:
    m = complex(m)
    if not (math.isfinite(m.real) and math.isfinite(m.imag)):
        raise DomainError(f"elliptic parameter must be finite, got {m}")
    if abs(m.imag) <= _BRANCH_CUT_TOL and m.real >= 1.0:
        raise DomainError(f"elliptic parameter {m} lies on the branch cut [1, inf)")
    return m


def elliptic_K(m: complex) -> complex:
    """Complete elliptic integral of the first kind, K(m).

    Uses the arithmetic-geometric mean generalized to complex arguments:
    K(m) = pi / (2 agm(1, sqrt(1-m))), where each geometric mean takes the
    square-root branch with |a_n - b_n| <= |a_n + b_n|.  Quadratic
    convergence gives relative accuracy well below 1e-12 away from the cut.

    Parameters
    ----------
    m : complex
        Elliptic parameter, anywhere off the real ray [1, inf).

    Returns
    -------
    complex
    """
    m = _check_parameter(m)
    a = 1.0 + 0.0j
    b = cmath.sqrt(1.0 - m)
    gap_prev = math.inf
    for _ in range(_MAX_LANDEN):
        an = 0.5 * (a + b)
        bn = cmath.sqrt(a * b)
        if abs(an - bn) > abs(an + bn):
            bn = -bn
        a, b = an, bn
        gap = abs(a - b)
        # quadratic convergence stalls only at the roundoff floor
        if gap <= 4e-16 * abs(a) or gap >= gap_prev:
            break
        gap_prev = gap
    else:
        raise ConvergenceError(f"AGM did not converge for m={m}")
    return math.pi / (2.0 * a)


@dataclass(frozen=True)
class EllipticContext:
    """Elliptic parameter with its derived quarter-periods and nome.

    Attributes
    ----------
    m : complex
        Elliptic parameter.
    K : complex
        Quarter-period K(m).
    Kprime : complex
        Complementary quarter-period K(1-m).
    q : complex
        Nome exp(-pi K'/K); |q| < 1 for admissible m.
    """

    m: complex
    K: complex
    Kprime: complex
    q: complex

    @classmethod
    def from_parameter(cls, m: complex) -> "EllipticContext":
        m = _check_parameter(m)
        if m == 0:
            # K' diverges and the nome vanishes: sn degenerates to sine
            return cls(m=0j, K=math.pi / 2 + 0j, Kprime=complex("inf"), q=0j)
        K = elliptic_K(m)
        Kp = elliptic_K(1.0 - m)
        q = cmath.exp(-math.pi * Kp / K)
        if not abs(q) < 1.0:
            raise DomainError(f"nome |q| = {abs(q)} >= 1 for m = {m}")
        return cls(m=m, K=K, Kprime=Kp, q=q)

    @property
    def degenerate(self) -> bool:
        """True in the m = 0 limit, where the period lattice is 1-dimensional."""
        return not cmath.isfinite(self.Kprime)


class SmallMExpansion(NamedTuple):
    K: complex
    Kprime: complex
    q: complex
    in_range: bool


def small_m_expansions(m: complex) -> SmallMExpansion:
    """Leading small-m forms K ~ (pi/2)(1 + m/4), K' ~ -(1/2) ln(m/16), q ~ m/16.

    Seeding and cross-check use only; validity window |m| < 0.2.  Outside the
    window the values are still returned but flagged and a RangeWarning is
    emitted.
    """
    m = complex(m)
    if m == 0:
        return SmallMExpansion(K=math.pi / 2 + 0j, Kprime=complex("inf"), q=0j, in_range=True)
    in_range = abs(m) < 0.2
    if not in_range:
        warnings.warn(f"small-m expansion used at |m| = {abs(m):.3g} >= 0.2", RangeWarning, stacklevel=2)
    K = (math.pi / 2) * (1.0 + m / 4.0)
    Kp = -0.5 * cmath.log(m / 16.0)
    q = m / 16.0
    return SmallMExpansion(K=K, Kprime=Kp, q=q, in_range=in_range)


def _lattice_coords(u: complex, p1: complex, p2: complex) -> tuple[float, float]:
    """Real coordinates (a, b) with u = a*p1 + b*p2."""
    det = p1.real * p2.imag - p1.imag * p2.real
    a = (u.real * p2.imag - u.imag * p2.real) / det
    b = (p1.real * u.imag - p1.imag * u.real) / det
    return a, b


def nearest_sn_pole(u: complex, ctx: EllipticContext) -> tuple[complex, complex]:
    """Nearest pole of sn(.|m) to u and the residue there.

    Poles sit at 2jK + (2l+1) i K'; the residue is (-1)^j / sqrt(m).  In the
    degenerate m = 0 limit sn = sin has no poles.
    """
    if ctx.degenerate:
        return complex("inf"), complex("inf")
    K, Kp = ctx.K, ctx.Kprime
    a, b = _lattice_coords(u, 2.0 * K, 1j * Kp)
    j = round(a)
    l = round((b - 1.0) / 2.0)
    pole = 2.0 * j * K + (2 * l + 1) * 1j * Kp
    residue = (-1.0) ** (j % 2) / cmath.sqrt(ctx.m)
    return pole, residue


def nearest_sn_zero(u: complex, ctx: EllipticContext) -> tuple[complex, float]:
    """Nearest zero of sn(.|m) to u and the sign (-1)^j of sn'(zero)."""
    if ctx.degenerate:
        j = round(u.real / math.pi)
        return j * math.pi + 0j, (-1.0) ** (j % 2)
    K, Kp = ctx.K, ctx.Kprime
    a, b = _lattice_coords(u, 2.0 * K, 2j * Kp)
    j = round(a)
    l = round(b)
    zero = 2.0 * j * K + 2j * l * Kp
    return zero, (-1.0) ** (j % 2)


def _reduce_argument(u: complex, ctx: EllipticContext) -> complex:
    # shift by the period lattice (4K, 2iK') to keep the base-case sine bounded
    if ctx.degenerate:
        return u - round(u.real / (4.0 * ctx.K.real)) * 4.0 * ctx.K
    a, b = _lattice_coords(u, 4.0 * ctx.K, 2j * ctx.Kprime)
    return u - round(a) * 4.0 * ctx.K - round(b) * 2j * ctx.Kprime


def sn_with_derivative(u: complex, m: complex, ctx: EllipticContext | None = None,
                       pole_guard: float = _POLE_GUARD) -> tuple[complex, complex]:
    """Jacobi sn(u|m) together with d sn/du.

    Descending Landen transformation on the parameter until |m_n| < 1e-12,
    trigonometric closed form (with its first-order parameter correction) at
    the bottom, value and derivative propagated back up through the exact
    recurrence.  The argument is first reduced modulo the period lattice.

    Raises
    ------
    PoleProximity
        If u lies within `pole_guard` of a pole of sn; carries the pole
        location and the residue there.
    """
    m = _check_parameter(m)
    if ctx is None:
        ctx = EllipticContext.from_parameter(m)
    u_orig = complex(u)
    u = _reduce_argument(u_orig, ctx)
    shift = u_orig - u  # a period-lattice translation; residues are invariant

    pole, residue = nearest_sn_pole(u, ctx)
    if abs(u - pole) < pole_guard:
        raise PoleProximity(pole=pole + shift, laurent=residue, order=1)

    ks = []
    mm, uu = m, u
    for _ in range(_MAX_LANDEN):
        if abs(mm) <= _LANDEN_FLOOR:
            break
        kp = cmath.sqrt(1.0 - mm)
        k1 = (1.0 - kp) / (1.0 + kp)
        ks.append(k1)
        mm = k1 * k1
        uu = uu / (1.0 + k1)
    else:
        raise ConvergenceError(f"Landen descent did not reach the floor for m={m}")

    # base case: sn(u|m) = sin u - (m/4)(u - sin u cos u) cos u + O(m^2)
    su, cu = cmath.sin(uu), cmath.cos(uu)
    s = su - (mm / 4.0) * (uu - su * cu) * cu
    ds = cu - (mm / 4.0) * (2.0 * su * su * cu - (uu - su * cu) * su)
    for k1 in reversed(ks):
        denom = 1.0 + k1 * s * s
        s, ds = (1.0 + k1) * s / denom, ds * (1.0 - k1 * s * s) / (denom * denom)
    return s, ds


def jacobi_sn(u: complex, m: complex, ctx: EllipticContext | None = None) -> complex:
    """Jacobi elliptic sine sn(u|m) for complex argument and parameter."""
    return sn_with_derivative(u, m, ctx)[0]


class SeriesValue(NamedTuple):
    value: complex
    error_bound: float


def reciprocal_sn_series(U: complex, ctx: EllipticContext, n_terms: int = 12) -> SeriesValue:
    """1/sn via the trigonometric series in the nome.

    Evaluates (pi/2K) (1/sin U + sum_{n=0}^{N} 4 q^{2n+1} sin((2n+1)U) /
    (1 - q^{2n+1})) for the reduced argument U = (pi/2K) u, returning the
    truncated sum together with a bound on the discarded tail.

    Requires |q| < 0.5 and |q| e^{|Im U|} < 1 for the tail bound to close.
    """
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    q = ctx.q
    if abs(q) >= 0.5:
        raise DomainError(f"series requires |q| < 0.5, got |q| = {abs(q):.3g}")
    U = complex(U)
    # poles of 1/sin at multiples of pi
    k = round(U.real / math.pi)
    if abs(U - k * math.pi) < _POLE_GUARD:
        raise PoleProximity(pole=k * math.pi + 0j, laurent=(-1.0) ** (k % 2), order=1)

    total = 1.0 / cmath.sin(U)
    for n in range(n_terms + 1):
        qp = q ** (2 * n + 1)
        total += 4.0 * qp * cmath.sin((2 * n + 1) * U) / (1.0 - qp)

    growth = math.exp(abs(U.imag))
    ratio = (abs(q) * growth) ** 2
    head = 4.0 * abs(q) ** (2 * n_terms + 3) * growth ** (2 * n_terms + 3)
    head /= max(1.0 - abs(q) ** (2 * n_terms + 3), 1e-300)
    if ratio < 1.0:
        bound = head / (1.0 - ratio)
    else:
        warnings.warn("series tail does not contract for this |Im U|", RangeWarning, stacklevel=2)
        bound = math.inf
    scale = math.pi / (2.0 * ctx.K)
    return SeriesValue(value=scale * total, error_bound=abs(scale) * bound)


_INV_E = math.exp(-1.0)


def _lambert_seed(branch: int, z: complex) -> complex:
    if branch == 0:
        if abs(z + _INV_E) < 0.25:
            p = cmath.sqrt(2.0 * (math.e * z + 1.0))
            return -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0
        if abs(z) < 0.8:
            # series seed for the principal branch near the origin
            return z * (1.0 - z + 1.5 * z * z)
        L = cmath.log(z)
        return L - cmath.log(L) if L != 0 else z
    if branch == -1 and abs(z + _INV_E) < 0.25:
        p = -cmath.sqrt(2.0 * (math.e * z + 1.0))
        return -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0
    L = cmath.log(z) + 2j * math.pi * branch
    return L - cmath.log(L)


def lambert_w(branch: int, z: complex, tol: float = 1e-13, max_iter: int = 100) -> complex:
    """Branch-indexed Lambert W: the solution w of w e^w = z on branch `branch`.

    Asymptotic seed ln z - ln ln z + 2 pi i n (with branch-point and
    small-argument variants), polished by Halley iteration to relative
    residual below 1e-12.  Branch ordering follows the standard convention:
    Im(W_n) increases with n.

    Parameters
    ----------
    branch : int
        Branch index; 0 is the principal branch.
    z : complex
        Argument; z = 0 only admissible on the principal branch.

    Raises
    ------
    DomainError
        For z = 0 with branch != 0.
    """
    z = complex(z)
    branch = int(branch)
    if z == 0:
        if branch == 0:
            return 0.0 + 0.0j
        raise DomainError("W_n(0) diverges for n != 0")
    if abs(z + _INV_E) < 1e-15 and abs(branch) <= 1:
        warnings.warn("Lambert W evaluated at the branch point -1/e; result is ill-conditioned",
                      ConditioningWarning, stacklevel=2)
        if branch in (0, -1):
            return -1.0 + 0.0j

    w = _lambert_seed(branch, z)
    for _ in range(max_iter):
        ew = cmath.exp(w)
        f = w * ew - z
        if abs(f) <= tol * max(abs(z), 1e-300):
            return w
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0:
            denom = ew * wp1 + 1e-300
        w = w - f / denom
    ew = cmath.exp(w)
    if abs(w * ew - z) <= 1e-10 * max(abs(z), 1e-300):
        warnings.warn("Lambert W converged only to ~1e-10 relative residual",
                      ConditioningWarning, stacklevel=2)
        return w
    raise ConvergenceError(f"Lambert W failed to converge for branch {branch}, z={z}")
