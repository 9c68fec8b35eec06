"""Exact Riemann solvers for the isentropic p-system.

Wave curves are parametrised by density.  A *forward* curve of family ``k``
through ``u0`` lists the right states reachable from the left state ``u0``
by one admissible ``k``-wave; a *backward* curve lists the left states that
reach ``u0``.  The classical problem intersects the forward 1-curve of the
left datum with the backward 2-curve of the right datum.

At a source point (a kink, or a Dirac mass of the dyadic approximation)
the two moving waves are separated by a stationary *zero wave* across
which ``q`` is continuous and the dynamic pressure jumps:

    P(u+) - P(u-) = a_q * q+ + a_rho * rho+

For a kink ``a_q = f kappa(2|sin(theta/2)|)`` and ``a_rho = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .eos import PressureLaw, State, check_state, entropy, entropy_flux
from .errors import (
    DomainError,
    NoSubsonicSolutionError,
    OutsideDomainError,
    SolverRangeError,
)
from .geometry import kink_jump_magnitude

__all__ = [
    "Wave",
    "WavePattern",
    "JumpLaw",
    "curve_velocity",
    "curve_state",
    "lax_curve",
    "lambda1",
    "lambda2",
    "solve_classical",
    "solve_point",
    "solve_kink",
    "stationary_right_state",
    "sample",
    "junction_residuals",
    "shock_entropy_production",
]

FORWARD, BACKWARD = 1, -1
SHOCK, RAREFACTION, ZERO = "shock", "rarefaction", "zero_wave"

_XTOL = 1e-15
_RTOL = 4.0 * np.finfo(float).eps


def lambda1(law: PressureLaw, u) -> float:
    return u[1] / u[0] - law.c(u[0])


def lambda2(law: PressureLaw, u) -> float:
    return u[1] / u[0] + law.c(u[0])


def _shock_dv(law, r0, s):
    """Velocity jump magnitude across a shock between densities ``r0`` and ``s``."""
    return math.sqrt(max((law._p(s) - law._p(r0)) * (s - r0) / (s * r0), 0.0))


def _shock_dv_prime(law, r0, s):
    """Derivative of the jump magnitude with respect to ``|s - r0|``."""
    d = s - r0
    if abs(d) <= 1e-7 * r0:
        return math.sqrt(law._dp(r0)) / r0
    dp = law._p(s) - law._p(r0)
    F = dp * d / (s * r0)
    Fp = (law._dp(s) * d + dp) / (s * r0) - dp * d / (s * s * r0)
    return abs(Fp) / (2.0 * math.sqrt(F))


def curve_velocity(law: PressureLaw, direction: int, family: int, u0, s: float):
    """Velocity and ``dv/ds`` on a Lax curve through ``u0`` at density ``s``.

    ``direction=FORWARD`` treats ``u0`` as the left state, ``BACKWARD`` as the
    right state.
    """
    r0, q0 = u0
    law.check(s)
    v0 = q0 / r0
    # v - ell is invariant along 2-rarefactions, v + ell along 1-rarefactions
    sgn = 1 if family == 2 else -1
    rarefaction = (s < r0) if (direction == FORWARD) == (family == 1) else (s > r0)
    if rarefaction or s == r0:
        v = v0 + sgn * (law._ell(s) - law._ell(r0))
        dv = sgn * math.sqrt(law._dp(s)) / s
    else:
        # the shock branch continues the rarefaction branch with the same orientation
        v = v0 + sgn * _shock_dv(law, r0, s) * (1 if s > r0 else -1)
        dv = sgn * _shock_dv_prime(law, r0, s)
    return v, dv


def curve_state(law, direction, family, u0, s) -> State:
    v, _ = curve_velocity(law, direction, family, u0, s)
    s = float(s)
    return State(s, s * float(v))


def lax_curve(law: PressureLaw, family: int, u0, s: float) -> State:
    """State joined to ``u0`` by one admissible wave of ``family``.

    For family 1 ``u0`` is the left state and ``s`` the right density; for
    family 2 ``u0`` is the right state and ``s`` the left density.
    """
    if not s > 0:
        raise DomainError(f"curve parameter must be a positive density, got {s}")
    u0 = check_state(u0)
    if family == 1:
        return curve_state(law, FORWARD, 1, u0, s)
    if family == 2:
        return curve_state(law, BACKWARD, 2, u0, s)
    raise ValueError("family must be 1 or 2")


# ---------------------------------------------------------------------------
# waves


@dataclass(frozen=True)
class Wave:
    family: int  # 1, 2, or 0 for a zero wave
    kind: str
    left: State
    right: State
    speed_lo: float
    speed_hi: float

    @property
    def strength(self) -> float:
        return abs(self.right.rho - self.left.rho) + abs(self.right.q - self.left.q)


@dataclass
class WavePattern:
    waves: list
    left: State
    right: State

    @property
    def traces(self):
        """(u-, u+) around the zero wave, or None for classical patterns."""
        for w in self.waves:
            if w.kind == ZERO:
                return w.left, w.right
        return None

    @property
    def states(self):
        out = [self.left]
        for w in self.waves:
            out.append(w.right)
        return out


def mass_speed(law, family, ul, ur) -> float:
    """Speed ``[q]/[rho]`` of a jump; the characteristic mean for vanishing jumps."""
    d = ur[0] - ul[0]
    if abs(d) > 1e-12 * max(ul[0], ur[0]):
        return (ur[1] - ul[1]) / d
    lam = lambda1 if family == 1 else lambda2
    return 0.5 * (lam(law, ul) + lam(law, ur))


def make_wave(law, family, ul, ur) -> Wave | None:
    """Wave of ``family`` between two states on the same Lax curve."""
    if ul[0] == ur[0] and ul[1] == ur[1]:
        return None
    ul, ur = State(*ul), State(*ur)
    compressive = ur.rho > ul.rho if family == 1 else ur.rho < ul.rho
    if compressive:
        s = mass_speed(law, family, ul, ur)
        return Wave(family, SHOCK, ul, ur, s, s)
    lam = lambda1 if family == 1 else lambda2
    return Wave(family, RAREFACTION, ul, ur, lam(law, ul), lam(law, ur))


def _bracket_decreasing(fun, x0, lo_lim, hi_lim):
    """Bracket the root of a decreasing function around ``x0``."""
    lo = hi = x0
    flo = fhi = fun(x0)
    if flo == 0.0:
        return x0, x0
    if flo > 0:
        while fhi > 0:
            lo, flo = hi, fhi
            hi = min(hi * 2.0, hi_lim)
            fhi = fun(hi)
            if hi >= hi_lim and fhi > 0:
                raise SolverRangeError("no intersection below the maximal density")
    else:
        while flo < 0:
            hi, fhi = lo, flo
            lo = max(lo * 0.5, lo_lim)
            flo = fun(lo)
            if lo <= lo_lim and flo < 0:
                raise SolverRangeError("no intersection above the minimal density (vacuum)")
    return lo, hi


def _classical_middle(law, ul, ur):
    def phi(r):
        return (curve_velocity(law, FORWARD, 1, ul, r)[0]
                - curve_velocity(law, BACKWARD, 2, ur, r)[0])

    x0 = math.sqrt(ul[0] * ur[0])
    lo, hi = _bracket_decreasing(phi, x0, law.rho_min, law.rho_max)
    if lo == hi:
        rm = lo
    else:
        rm = brentq(phi, lo, hi, xtol=_XTOL * x0, rtol=_RTOL, maxiter=200)
    return rm


def solve_classical(law: PressureLaw, u_l, u_r) -> WavePattern:
    """Self-similar solution of the source-free Riemann problem.

    Returns the 1-wave and the 2-wave (omitting trivial ones); identical
    data give an empty wave list.
    """
    ul, ur = check_state(u_l), check_state(u_r)
    if ul == ur:
        return WavePattern([], ul, ur)
    rm = _classical_middle(law, ul, ur)
    um = curve_state(law, FORWARD, 1, ul, rm)
    waves = [w for w in (make_wave(law, 1, ul, um), make_wave(law, 2, um, ur)) if w is not None]
    return WavePattern(waves, ul, ur)


# ---------------------------------------------------------------------------
# stationary jumps


@dataclass(frozen=True)
class JumpLaw:
    """Required jump ``P(u+) - P(u-) = a_q q+ + a_rho rho+`` at a source point."""

    a_q: float = 0.0
    a_rho: float = 0.0

    def __call__(self, u_plus) -> float:
        return self.a_q * u_plus[1] + self.a_rho * u_plus[0]

    @property
    def trivial(self) -> bool:
        return self.a_q == 0.0 and self.a_rho == 0.0

    @classmethod
    def kink(cls, theta, f_value, kappa):
        return cls(f_value * kappa(kink_jump_magnitude(theta)), 0.0)


def _invert_dynamic_pressure(law, q, a_rho, target, rho_hint):
    """Subsonic root of ``G(rho) = q^2/rho + p(rho) - a_rho rho = target``."""

    def G(r):
        return q * q / r + law._p(r) - a_rho * r

    def Gp(r):
        return law._dp(r) - q * q / (r * r) - a_rho

    rho_hint = min(max(rho_hint, law.rho_min), law.rho_max)
    g0 = G(rho_hint)
    if g0 == target and Gp(rho_hint) > 0:
        return rho_hint
    if Gp(rho_hint) > 0 and target > g0:
        lo, hi = rho_hint, rho_hint
        while G(hi) < target:
            lo = hi
            hi *= 2.0
            if hi > law.rho_max:
                raise NoSubsonicSolutionError("stationary jump exceeds the maximal density")
        return brentq(lambda r: G(r) - target, lo, hi, xtol=_XTOL * lo, rtol=_RTOL, maxiter=200)
    # G is convex: locate its minimiser below or above the hint
    if Gp(law.rho_min) >= 0:
        rstar = law.rho_min
    else:
        hi = rho_hint
        while Gp(hi) <= 0:
            hi *= 2.0
            if hi > law.rho_max:
                raise NoSubsonicSolutionError("no subsonic branch for the stationary jump")
        rstar = brentq(Gp, law.rho_min, hi, xtol=1e-300, rtol=_RTOL, maxiter=400)
    if G(rstar) > target:
        raise NoSubsonicSolutionError(
            f"required dynamic pressure {target:.6g} below the sonic minimum {G(rstar):.6g}")
    hi = max(rstar, rho_hint)
    while G(hi) < target:
        hi *= 2.0
        if hi > law.rho_max:
            raise NoSubsonicSolutionError("stationary jump exceeds the maximal density")
    if hi == rstar:
        return rstar
    return brentq(lambda r: G(r) - target, rstar, hi, xtol=_XTOL * rstar, rtol=_RTOL, maxiter=200)


def stationary_right_state(law: PressureLaw, u_left, jump: JumpLaw) -> State:
    """Right trace of the zero wave whose left trace is ``u_left``."""
    rho_l, q = u_left
    if jump.trivial:
        return State(rho_l, q)
    target = q * q / rho_l + law._p(rho_l) + jump.a_q * q
    rho_r = _invert_dynamic_pressure(law, q, jump.a_rho, target, rho_l)
    return State(rho_r, q)


def stationary_left_state(law: PressureLaw, u_right, jump: JumpLaw) -> State:
    """Left trace of the zero wave whose right trace is ``u_right``."""
    rho_r, q = u_right
    if jump.trivial:
        return State(rho_r, q)
    target = q * q / rho_r + law._p(rho_r) - jump(u_right)
    rho_l = _invert_dynamic_pressure(law, q, 0.0, target, rho_r)
    return State(rho_l, q)


# ---------------------------------------------------------------------------
# source-point Riemann problem


def _point_residual(law, ul, ur, jump, rm, rp):
    v1, dv1 = curve_velocity(law, FORWARD, 1, ul, rm)
    v2, dv2 = curve_velocity(law, BACKWARD, 2, ur, rp)
    q1, q2 = rm * v1, rp * v2
    dq1, dq2 = v1 + rm * dv1, v2 + rp * dv2
    P1 = q1 * v1 + law._p(rm)
    P2 = q2 * v2 + law._p(rp)
    R = np.array([q1 - q2, P2 - P1 - jump.a_q * q2 - jump.a_rho * rp])
    dP1 = law._dp(rm) - v1 * v1 + 2.0 * v1 * dq1
    dP2 = law._dp(rp) - v2 * v2 + 2.0 * v2 * dq2
    J = np.array([[dq1, -dq2], [-dP1, dP2 - jump.a_q * dq2 - jump.a_rho]])
    return R, J


def _point_newton(law, ul, ur, jump, rm, rp, tol, maxiter=60):
    scale = max(1.0, abs(ul[1]), abs(ur[1]))
    pscale = max(1.0, law._p(ul[0]), law._p(ur[0]))
    w = np.array([1.0 / scale, 1.0 / pscale])
    R, J = _point_residual(law, ul, ur, jump, rm, rp)
    err = float(np.max(np.abs(R * w)))
    for _ in range(maxiter):
        if err <= tol:
            return rm, rp
        try:
            step = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while True:
            nm, np_ = rm + lam * step[0], rp + lam * step[1]
            if nm > 0 and np_ > 0 and law.rho_min <= min(nm, np_) and max(nm, np_) <= law.rho_max:
                R2, J2 = _point_residual(law, ul, ur, jump, nm, np_)
                e2 = float(np.max(np.abs(R2 * w)))
                if e2 < err or lam < 1e-4:
                    break
            lam *= 0.5
            if lam < 1e-8:
                return None
        rm, rp, R, J, err = nm, np_, R2, J2, e2
    return (rm, rp) if err <= 100 * tol else None


def _point_nested(law, ul, ur, jump):
    """Nested bisection: for each right trace on the backward 2-curve find the
    stationary left trace, then match it against the forward 1-curve."""

    def mismatch(rp):
        up = curve_state(law, BACKWARD, 2, ur, rp)
        um = stationary_left_state(law, up, jump)
        # q along the forward 1-curve at density rho- versus q+
        v1, _ = curve_velocity(law, FORWARD, 1, ul, um.rho)
        return um.rho * v1 - up.q

    x0 = ur[0]
    lo, hi = x0, x0
    f0 = mismatch(x0)
    if f0 == 0:
        return stationary_left_state(law, curve_state(law, BACKWARD, 2, ur, x0), jump).rho, x0
    # mismatch decreases with rp (q+ grows along the 2-curve, rho- and q1 follow);
    # a step into the sonic region is retried with a smaller factor
    good = x0
    step = 1.05
    for _ in range(800):
        trial = good * step if f0 > 0 else good / step
        try:
            ft = mismatch(trial)
        except (NoSubsonicSolutionError, DomainError):
            step = 1.0 + 0.5 * (step - 1.0)
            if step - 1.0 < 1e-14:
                raise OutsideDomainError("nested solver met the sonic boundary")
            continue
        if (ft <= 0) if f0 > 0 else (ft >= 0):
            lo, hi = (good, trial) if f0 > 0 else (trial, good)
            break
        good = trial
        step = min(1.0 + 1.5 * (step - 1.0), 2.0)
    else:
        raise OutsideDomainError("nested solver could not bracket the right trace")
    try:
        flo, fhi = mismatch(lo), mismatch(hi)
    except (NoSubsonicSolutionError, DomainError) as exc:
        raise OutsideDomainError(f"nested solver left the subsonic region: {exc}") from exc
    if flo * fhi > 0:
        raise OutsideDomainError("nested solver could not bracket the right trace")
    rp = brentq(mismatch, lo, hi, xtol=_XTOL * lo, rtol=_RTOL, maxiter=200)
    um = stationary_left_state(law, curve_state(law, BACKWARD, 2, ur, rp), jump)
    return um.rho, rp


def solve_point(law: PressureLaw, u_l, u_r, jump: JumpLaw, tol: float = 1e-13,
                method: str = "newton") -> WavePattern:
    """Riemann problem at a source point: 1-wave, zero wave, 2-wave.

    The zero wave is always present (possibly of zero strength).  Both
    traces share the right-trace momentum exactly.
    """
    ul, ur = check_state(u_l), check_state(u_r)
    if jump.trivial:
        pat = solve_classical(law, ul, ur)
        um = pat.waves[0].right if pat.waves and pat.waves[0].family == 1 else ul
        zero = Wave(0, ZERO, um, um, 0.0, 0.0)
        w1 = [w for w in pat.waves if w.family == 1]
        w2 = [w for w in pat.waves if w.family == 2]
        return WavePattern(w1 + [zero] + w2, ul, ur)
    # data already on a stationary discontinuity
    if ul.q == ur.q:
        zr = stationary_right_state(law, ul, jump)
        if abs(zr.rho - ur.rho) <= 4 * np.finfo(float).eps * ur.rho:
            return WavePattern([Wave(0, ZERO, ul, ur, 0.0, 0.0)], ul, ur)
    sol = None
    if method == "newton":
        try:
            rm0 = _classical_middle(law, ul, ur)
            um0 = curve_state(law, FORWARD, 1, ul, rm0)
            rp0 = stationary_right_state(law, um0, jump).rho
            sol = _point_newton(law, ul, ur, jump, rm0, rp0, tol)
        except (SolverRangeError, NoSubsonicSolutionError, DomainError):
            sol = None
    if sol is None:
        sol = _point_nested(law, ul, ur, jump)
    rm, rp = sol
    up = curve_state(law, BACKWARD, 2, ur, rp)
    q = up.q
    um = State(float(rm), q)
    for u in (um, up):
        if not abs(u.q / u.rho) < law.c(u.rho):
            raise OutsideDomainError(f"junction trace {tuple(u)} is not subsonic")
    waves = []
    w1 = make_wave(law, 1, ul, um)
    if w1 is not None:
        waves.append(w1)
    waves.append(Wave(0, ZERO, um, up, 0.0, 0.0))
    w2 = make_wave(law, 2, up, ur)
    if w2 is not None:
        waves.append(w2)
    return WavePattern(waves, ul, ur)


def solve_kink(law: PressureLaw, u_l, u_r, theta: float, f_at_kink: float, coeffs,
               **kw) -> WavePattern:
    """Riemann problem at a kink of angle ``theta`` with wall factor ``f_at_kink``.

    Traces satisfy ``q- = q+`` and ``P(u-) = P(u+) - f kappa(2|sin(theta/2)|) q+``.
    """
    ul, ur = check_state(u_l), check_state(u_r)
    for u in (ul, ur):
        if not abs(u.q / u.rho) < law.c(u.rho):
            raise OutsideDomainError(f"datum {tuple(u)} is not subsonic")
    return solve_point(law, ul, ur, JumpLaw.kink(theta, f_at_kink, coeffs.kappa), **kw)


def junction_residuals(law, pattern: WavePattern, jump: JumpLaw):
    """``(|[q]|, |[P] - jump(u+)|)`` across the zero wave of a pattern."""
    um, up = pattern.traces
    Pm = um.q * um.q / um.rho + law.p(um.rho)
    Pp = up.q * up.q / up.rho + law.p(up.rho)
    return abs(up.q - um.q), abs(Pp - Pm - jump(up))


def shock_entropy_production(law, wave: Wave) -> float:
    """``s [E] - [F]`` across a shock; non-negative for admissible shocks."""
    s = wave.speed_lo
    dE = entropy(law, wave.right) - entropy(law, wave.left)
    dF = entropy_flux(law, wave.right) - entropy_flux(law, wave.left)
    return s * dE - dF


# ---------------------------------------------------------------------------
# sampling


def _rarefaction_state(law, wave: Wave, xi):
    fam = wave.family
    lam = lambda1 if fam == 1 else lambda2

    def fun(r):
        return lam(law, curve_state(law, FORWARD, fam, wave.left, r)) - xi

    a, b = sorted((wave.left.rho, wave.right.rho))
    r = brentq(fun, a, b, xtol=_XTOL * a, rtol=_RTOL, maxiter=200)
    return curve_state(law, FORWARD, fam, wave.left, r)


def sample(pattern: WavePattern, xi: float, law: PressureLaw | None = None) -> State:
    """State on the ray ``x = xi t``.

    At a discontinuity (including the zero wave at ``xi = 0``) the right
    state is returned.  ``law`` is needed only to evaluate rarefaction
    interiors.
    """
    for w in pattern.waves:
        if xi < w.speed_lo:
            return w.left
        if w.kind == RAREFACTION and xi < w.speed_hi:
            if law is None:
                raise ValueError("sampling a rarefaction interior needs the pressure law")
            return _rarefaction_state(law, w, xi)
    return pattern.right
