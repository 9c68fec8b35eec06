"""Dyadic point-source approximation of a piecewise smooth pipe.

Distributed sources are lumped onto the points ``x_j = j 2**-n`` with the
cell weight ``2**-n``; kinks keep their exact coefficient and must sit on
the grid.  Each active point acts as a stationary discontinuity: ``q`` is
continuous and

    smooth sample:  P(u+) - P(u-) = -(c_q q+ + c_g rho+)
    kink:           P(u+) - P(u-) = +c_q q+ - c_g rho+
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .eos import PressureLaw, State
from .errors import RefinementError
from .geometry import PipeGeometry, SourceCoefficients, kink_jump_magnitude
from .riemann import JumpLaw, stationary_right_state

__all__ = [
    "GridPoint",
    "DeltaSourceGrid",
    "build_grid",
    "stationary_jump_at_point",
    "discrete_stationary",
]

DROP_BELOW = 1e-14
SMOOTH, KINK = "smooth_sample", "kink"


@dataclass(frozen=True)
class GridPoint:
    x: float
    kind: str
    q_coefficient: float
    gravity_coefficient: float
    theta: float = 0.0

    @property
    def jump(self) -> JumpLaw:
        if self.kind == KINK:
            return JumpLaw(self.q_coefficient, -self.gravity_coefficient)
        return JumpLaw(-self.q_coefficient, -self.gravity_coefficient)

    @property
    def weight(self) -> float:
        return abs(self.q_coefficient) + abs(self.gravity_coefficient)


@dataclass(frozen=True)
class DeltaSourceGrid:
    n: int
    points: tuple

    @property
    def positions(self):
        return [p.x for p in self.points]

    def total_q_coefficient(self, kind=None) -> float:
        return math.fsum(p.q_coefficient for p in self.points if kind is None or p.kind == kind)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "kind", "q_coefficient", "gravity_coefficient", "theta"])
            for p in self.points:
                w.writerow([repr(p.x), p.kind, repr(p.q_coefficient),
                            repr(p.gravity_coefficient), repr(p.theta)])


def _dyadic_index(x, n):
    j = x * 2.0 ** n
    if not float(j).is_integer():
        return None
    return int(j)


def build_grid(geometry: PipeGeometry, coeffs: SourceCoefficients, n: int) -> DeltaSourceGrid:
    """Point sources of level ``n`` for ``geometry``.

    Raises ``RefinementError`` when a kink is not a multiple of ``2**-n`` or
    the support does not fit in ``[-2**n, 2**n]``.
    """
    if n < 0:
        raise RefinementError(f"level must be non-negative, got {n}")
    h = 2.0 ** -n
    jmax = 4 ** n
    kink_idx = {}
    for k in geometry.kinks:
        j = _dyadic_index(k.x, n)
        if j is None:
            raise RefinementError(f"kink at x = {k.x!r} is not on the level-{n} dyadic grid")
        if abs(j) > jmax:
            raise RefinementError(f"kink at x = {k.x!r} outside [-2^{n}, 2^{n}]")
        kink_idx[j] = k
    if geometry.support_radius > 2.0 ** n:
        raise RefinementError(f"pipe support exceeds [-2^{n}, 2^{n}]")

    points = []
    if geometry.segments:
        j_lo = math.floor(geometry.x_start / h)
        j_hi = math.ceil(geometry.x_end / h)
    else:
        j_lo = j_hi = None
    js = set(kink_idx)
    if j_lo is not None:
        js.update(range(max(j_lo, -jmax), min(j_hi, jmax) + 1))
    for j in sorted(js):
        x = j * h
        if j in kink_idx:
            k = kink_idx[j]
            cq = coeffs.f(x) * coeffs.kappa(kink_jump_magnitude(k.theta))
            sin_a = 0.5 * (geometry.sin_inclination(x, -1) + geometry.sin_inclination(x, 1))
            cg = h * coeffs.g * sin_a
            pt = GridPoint(x, KINK, cq, cg, k.theta)
        else:
            cq = h * coeffs.f(x) * coeffs.kappa(geometry.curvature(x))
            cg = h * coeffs.g * geometry.sin_inclination(x)
            pt = GridPoint(x, SMOOTH, cq, cg)
        if abs(pt.q_coefficient) < DROP_BELOW and abs(pt.gravity_coefficient) < DROP_BELOW:
            continue
        points.append(pt)
    return DeltaSourceGrid(n, tuple(points))


def stationary_jump_at_point(law: PressureLaw, point: GridPoint, u_left_trace) -> State:
    """Right trace of the stationary discontinuity at ``point``."""
    return stationary_right_state(law, State(*u_left_trace), point.jump)


def discrete_stationary(law: PressureLaw, grid: DeltaSourceGrid, q: float, rho_left: float):
    """Piecewise constant stationary solution of the point-source system.

    Returns ``(positions, states)`` with ``len(states) == len(positions) + 1``.
    """
    u = State(float(rho_left), float(q))
    states = [u]
    for p in grid.points:
        u = stationary_jump_at_point(law, p, u)
        states.append(u)
    return np.array(grid.positions, dtype=float), states
