"""Stationary solutions: constant momentum, density from the steady balance.

Along smooth arcs the density solves

    d/dx P(rho, q) = -f kappa(|Gamma''|) q - rho g sin(alpha)

which is integrated in ``rho`` after dividing by ``dP/drho = p' - q^2/rho^2``;
at kinks the density jumps so that ``P`` increases by ``f kappa q``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .eos import PressureLaw, State
from .errors import GeometryError, SolverDomainError, SonicApproachError
from .geometry import PipeGeometry, SourceCoefficients
from .riemann import JumpLaw, stationary_right_state

__all__ = [
    "StationaryProfile",
    "jump_across_kink",
    "integrate_smooth",
    "build",
]

MARGIN_FLOOR = 1e-6
# the dense interpolant is far less accurate than the step values over long steps
MAX_STEP = 0.05


def jump_across_kink(law: PressureLaw, rho_left: float, q: float, theta: float,
                     f_val: float, coeffs: SourceCoefficients) -> float:
    """Density on the right of a stationary kink with density ``rho_left`` on its left."""
    return stationary_right_state(law, State(rho_left, q), JumpLaw.kink(theta, f_val, coeffs.kappa)).rho


def _rhs(law, geom, coeffs, q):
    def rhs(x, y):
        rho = y[0]
        src = -coeffs.f(x) * coeffs.kappa(geom.curvature(x)) * q - rho * coeffs.g * geom.sin_inclination(x)
        return [src / (law._dp(rho) - q * q / (rho * rho))]

    return rhs


def integrate_smooth(law: PressureLaw, geometry: PipeGeometry, coeffs: SourceCoefficients,
                     q: float, rho_start: float, x_start: float, x_end: float,
                     rtol: float = 1e-10, margin_floor: float = MARGIN_FLOOR):
    """Integrate the steady balance across one smooth segment.

    Returns the ``OdeSolution`` dense interpolant (``x_end < x_start`` is
    allowed and integrates backwards).
    """
    lo, hi = sorted((x_start, x_end))
    for b in geometry.breakpoints:
        if lo < b < hi:
            raise GeometryError(f"interval [{lo}, {hi}] crosses the breakpoint {b}")
    law.check(rho_start)
    if law.c(rho_start) - abs(q / rho_start) < margin_floor:
        raise SonicApproachError(f"start state ({rho_start}, {q}) is not subsonic")

    def sonic(x, y):
        rho = y[0]
        if rho <= 0:
            return -1.0
        return math.sqrt(law._dp(rho)) - abs(q / rho) - margin_floor

    sonic.terminal = True
    sonic.direction = -1
    sol = solve_ivp(_rhs(law, geometry, coeffs, q), (x_start, x_end), [rho_start],
                    method="RK45", rtol=rtol, atol=1e-12 * max(1.0, rho_start),
                    dense_output=True, events=sonic, max_step=MAX_STEP)
    if sol.status == 1:
        raise SonicApproachError(
            f"subsonic margin fell below {margin_floor} at x = {sol.t_events[0][0]:.6g}")
    if not sol.success:
        raise SolverDomainError(f"stationary integration failed: {sol.message}")
    return sol.sol


@dataclass
class StationaryProfile:
    """Piecewise smooth stationary density with constant momentum ``q``."""

    q: float
    rho_left: float
    rho_right: float
    breakpoints: list
    pieces: list  # (x_a, x_b, OdeSolution)
    kink_values: list  # (x, rho_minus, rho_plus, theta)
    law: PressureLaw
    geometry: PipeGeometry
    coeffs: SourceCoefficients

    def rho(self, x):
        """Density at ``x`` (right-continuous at kinks); accepts arrays."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        for i, xi in enumerate(xs):
            out[i] = self._rho_scalar(xi)
        return out if np.ndim(x) else float(out[0])

    def _rho_scalar(self, x):
        g = self.geometry
        if x < g.x_start:
            return self.rho_left
        for a, b, sol in self.pieces:
            if a <= x < b:
                return float(sol(x)[0])
        return self.rho_right

    def state(self, x) -> State:
        return State(self.rho(x), self.q)

    def dynamic_pressure(self, x):
        r = self.rho(x)
        return self.q * self.q / r + np.vectorize(self.law.p)(r)

    # -- self checks --------------------------------------------------------
    def jump_residuals(self):
        out = []
        for x, rm, rp, theta in self.kink_values:
            fk = self.coeffs.f(x) * self.coeffs.kappa(2.0 * abs(math.sin(0.5 * theta)))
            Pm = self.q ** 2 / rm + self.law.p(rm)
            Pp = self.q ** 2 / rp + self.law.p(rp)
            out.append(abs((Pm - Pp) + fk * self.q))
        return out

    def ode_residual(self, n=50, h=1e-4):
        """Max |dP/dx + f kappa q + rho g sin(alpha)| by central differences inside arcs."""
        worst = 0.0
        law, q, c, geom = self.law, self.q, self.coeffs, self.geometry
        for a, b, sol in self.pieces:
            if b - a <= 4 * h:
                continue
            for x in np.linspace(a + 2 * h, b - 2 * h, n):
                rp, rm = float(sol(x + h)[0]), float(sol(x - h)[0])
                dP = ((q * q / rp + law.p(rp)) - (q * q / rm + law.p(rm))) / (2 * h)
                r = float(sol(x)[0])
                src = -c.f(x) * c.kappa(geom.curvature(x)) * q - r * c.g * geom.sin_inclination(x)
                worst = max(worst, abs(dP - src))
        return worst

    def min_margin(self, n=200):
        xs = self.sample_points(n)
        return min(self.law.c(r) - abs(self.q / r) for r in self.rho(xs))

    def sample_points(self, n=200):
        g = self.geometry
        pad = max(1.0, 0.1 * (g.x_end - g.x_start))
        return np.linspace(g.x_start - pad, g.x_end + pad, n)

    def to_csv(self, path, xs=None):
        xs = self.sample_points() if xs is None else np.asarray(xs)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "rho", "q", "P"])
            for x in xs:
                r = self.rho(float(x))
                w.writerow([repr(float(x)), repr(r), repr(self.q),
                            repr(self.q * self.q / r + self.law.p(r))])


def build(law: PressureLaw, geometry: PipeGeometry, coeffs: SourceCoefficients, q: float,
          rho_at_left_infinity: float, rtol: float = 1e-10,
          margin_floor: float = MARGIN_FLOOR) -> StationaryProfile:
    """March left to right gluing smooth pieces and kink jumps."""
    kinks = {k.x: k for k in geometry.kinks}
    rho = float(rho_at_left_infinity)
    law.check(rho)
    if law.c(rho) - abs(q / rho) <= 0:
        raise SonicApproachError("seed state is not subsonic")
    pieces, kvals = [], []

    def apply_kink(x, rho):
        k = kinks.get(x)
        if k is None:
            return rho
        try:
            rp = jump_across_kink(law, rho, q, k.theta, coeffs.f(x), coeffs)
        except SolverDomainError as exc:
            raise type(exc)(f"at kink x = {x}: {exc}") from exc
        kvals.append((x, rho, rp, k.theta))
        return rp

    for seg in geometry.segments:
        rho = apply_kink(seg.x_start, rho)
        try:
            sol = integrate_smooth(law, geometry, coeffs, q, rho, seg.x_start, seg.x_end,
                                   rtol=rtol, margin_floor=margin_floor)
        except SolverDomainError as exc:
            raise type(exc)(f"on segment [{seg.x_start}, {seg.x_end}]: {exc}") from exc
        pieces.append((seg.x_start, seg.x_end, sol))
        rho = float(sol(seg.x_end)[0])
    rho = apply_kink(geometry.x_end, rho)
    return StationaryProfile(q, float(rho_at_left_infinity), rho, list(geometry.breakpoints),
                             pieces, kvals, law, geometry, coeffs)
