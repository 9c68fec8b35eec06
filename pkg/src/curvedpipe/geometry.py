"""Piecewise smooth pipes parametrised by arc length.

A pipe is a horizontal incoming ray, a finite list of smooth segments and a
horizontal outgoing ray.  Segments are described analytically (straight,
circular arc, planar curve with a tabulated curvature profile) or from
sampled points.  Whenever the tangent jumps between two consecutive pieces
the junction is a kink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import GeometryError, ReparametrizationError

__all__ = [
    "Kink",
    "StraightSegment",
    "ArcSegment",
    "ProfileSegment",
    "SampledSegment",
    "PipeGeometry",
    "SourceCoefficients",
    "ConstantF",
    "TabulatedF",
    "LinearKappa",
    "TabulatedKappa",
    "build_geometry",
    "from_curve_samples",
    "kink_jump_magnitude",
    "tangent_variation_measure",
    "smooth_source",
]

EZ = np.array([0.0, 0.0, 1.0])
TANGENT_TOL = 1e-12
UNIT_SPEED_TOL = 1e-6


def _unit(v, what="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise GeometryError(f"{what} must have three components")
    n = np.linalg.norm(v)
    if not n > 0:
        raise GeometryError(f"{what} must be non-zero")
    return v / n


def kink_jump_magnitude(theta: float) -> float:
    """``|Gamma'(x+) - Gamma'(x-)|`` for unit tangents meeting at angle ``theta``."""
    return 2.0 * abs(math.sin(0.5 * theta))


def kink_angle(t_minus, t_plus) -> float:
    """Signed angle between unit tangents, positive for a left turn seen from above."""
    cross = np.cross(t_minus, t_plus)
    s = float(np.linalg.norm(cross))
    c = float(np.clip(np.dot(t_minus, t_plus), -1.0, 1.0))
    theta = math.atan2(s, c)
    if cross[2] < 0:
        theta = -theta
    return theta


@dataclass(frozen=True)
class Kink:
    x: float
    theta: float

    @property
    def jump(self) -> float:
        return kink_jump_magnitude(self.theta)


# ---------------------------------------------------------------------------
# segments


class _Segment:
    """Smooth piece on ``[x_start, x_start + length]``.

    Planar segments turn the tangent inside the plane spanned by the start
    tangent ``t0`` and the unit normal ``n0`` by the angle ``phi(s)``.
    """

    length: float
    x_start: float = 0.0

    @property
    def x_end(self) -> float:
        return self.x_start + self.length

    def bind(self, x_start, t0):  # pragma: no cover - overridden
        raise NotImplementedError

    def curvature(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError


@dataclass
class StraightSegment(_Segment):
    length: float
    direction: Sequence[float] | None = None
    x_start: float = 0.0
    t0: np.ndarray | None = field(default=None, repr=False)

    def bind(self, x_start, t_prev):
        t0 = t_prev if self.direction is None else _unit(self.direction, "direction")
        return StraightSegment(self.length, self.direction, x_start, t0)

    def curvature(self, s):
        return 0.0

    def tangent(self, s):
        return self.t0


@dataclass
class _PlanarSegment(_Segment):
    length: float
    normal: Sequence[float] | None = None
    direction: Sequence[float] | None = None
    x_start: float = 0.0
    t0: np.ndarray | None = field(default=None, repr=False)
    n0: np.ndarray | None = field(default=None, repr=False)

    def _frame(self, t_prev):
        t0 = t_prev if self.direction is None else _unit(self.direction, "direction")
        if self.normal is None:
            n = np.cross(EZ, t0)
            if np.linalg.norm(n) < 1e-12:
                raise GeometryError("default turning normal undefined for a vertical tangent")
        else:
            n = np.asarray(self.normal, dtype=float)
            n = n - np.dot(n, t0) * t0
        return t0, _unit(n, "normal")

    def phi(self, s):
        raise NotImplementedError

    def tangent(self, s):
        ph = self.phi(s)
        return math.cos(ph) * self.t0 + math.sin(ph) * self.n0


@dataclass
class ArcSegment(_PlanarSegment):
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("arc radius must be positive")

    def bind(self, x_start, t_prev):
        t0, n0 = self._frame(t_prev)
        return ArcSegment(self.length, self.normal, self.direction, x_start, t0, n0, self.radius)

    def curvature(self, s):
        return 1.0 / self.radius

    def phi(self, s):
        return s / self.radius


@dataclass
class ProfileSegment(_PlanarSegment):
    """Planar curve with curvature ``k(s)`` interpolated (C1, monotone) from a table."""

    s_table: Sequence[float] = (0.0, 1.0)
    k_table: Sequence[float] = (0.0, 0.0)

    def __post_init__(self):
        s = np.asarray(self.s_table, dtype=float)
        k = np.asarray(self.k_table, dtype=float)
        if s.shape != k.shape or s.size < 2 or np.any(np.diff(s) <= 0):
            raise GeometryError("curvature table needs >= 2 increasing abscissae")
        if np.any(k < 0):
            raise GeometryError("curvature values must be non-negative")
        self._k = PchipInterpolator(s, k, extrapolate=True)
        self._phi = self._k.antiderivative()

    def bind(self, x_start, t_prev):
        t0, n0 = self._frame(t_prev)
        return ProfileSegment(self.length, self.normal, self.direction, x_start, t0, n0,
                              self.s_table, self.k_table)

    def curvature(self, s):
        return float(self._k(s))

    def phi(self, s):
        return float(self._phi(s) - self._phi(0.0))


class SampledSegment(_Segment):
    """Smooth piece reconstructed from samples by a C2 cubic spline."""

    def __init__(self, s, points):
        s = np.asarray(s, dtype=float)
        self.x_start = float(s[0])
        self.length = float(s[-1] - s[0])
        self._spl = CubicSpline(s - s[0], np.asarray(points, dtype=float), axis=0)
        self._d1 = self._spl.derivative(1)
        self._d2 = self._spl.derivative(2)

    def bind(self, x_start, t_prev):
        return self

    def curvature(self, s):
        return float(np.linalg.norm(self._d2(s)))

    def tangent(self, s):
        return np.asarray(self._d1(s), dtype=float)

    def speed_deviation(self, n=None):
        n = n or max(50, int(20 * self.length) + 1)
        ss = np.linspace(0.0, self.length, n)
        return float(np.max(np.abs(np.linalg.norm(self._d1(ss), axis=1) - 1.0)))


# ---------------------------------------------------------------------------
# geometry


class PipeGeometry:
    """Piecewise C2 arc-length curve, straight and horizontal outside ``[x_start, x_end]``.

    Parameters
    ----------
    segments : sequence of segments
        Smooth pieces laid end to end starting at ``x_start``.
    x_start : float
        Arc length where the first segment begins.
    initial_direction : 3-vector
        Tangent of the incoming horizontal ray.
    final_direction : 3-vector, optional
        Tangent of the outgoing ray; defaults to the end tangent of the last
        segment.  A mismatch produces a kink at ``x_end``.
    """

    def __init__(self, segments=(), x_start=0.0, initial_direction=(1.0, 0.0, 0.0),
                 final_direction=None):
        t = _unit(initial_direction, "initial_direction")
        self.initial_direction = t
        bound = []
        x = float(x_start)
        kinks = []
        for seg in segments:
            if not seg.length > 0:
                raise GeometryError("segment lengths must be positive")
            b = seg.bind(x, t)
            t_start = _unit(b.tangent(0.0), "tangent")
            if np.linalg.norm(t_start - t) > TANGENT_TOL:
                kinks.append(Kink(x, kink_angle(t, t_start)))
            bound.append(b)
            x = b.x_end
            t = _unit(b.tangent(b.length), "tangent")
        if final_direction is not None:
            tf = _unit(final_direction, "final_direction")
            if np.linalg.norm(tf - t) > TANGENT_TOL:
                kinks.append(Kink(x, kink_angle(t, tf)))
            t = tf
        self.final_direction = t
        self.segments = tuple(bound)
        self.x_start = float(x_start)
        self.x_end = x
        self.kinks = tuple(kinks)
        self._starts = np.array([s.x_start for s in bound])
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self):
        for name, t in (("incoming", self.initial_direction), ("outgoing", self.final_direction)):
            if abs(float(np.dot(t, EZ))) > 1e-12:
                raise GeometryError(f"{name} ray must be horizontal")
        xs = [k.x for k in self.kinks]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise GeometryError("kink positions must be strictly increasing")
        for k in self.kinks:
            if not -math.pi < k.theta < math.pi:
                raise GeometryError(f"kink angle {k.theta} outside (-pi, pi)")
        for seg in self.segments:
            ss = np.linspace(0.0, seg.length, 9)
            for s in ss:
                ti = float(np.dot(seg.tangent(s), EZ))
                if abs(ti) >= 1.0 - 1e-12:
                    raise GeometryError("vertical tangent: inclination must stay in (-pi/2, pi/2)")

    @property
    def support_radius(self) -> float:
        return max(abs(self.x_start), abs(self.x_end), 0.0)

    @property
    def breakpoints(self) -> list[float]:
        """Segment boundaries inside the support (including kinks)."""
        if not self.segments:
            return [k.x for k in self.kinks]
        return [s.x_start for s in self.segments] + [self.x_end]

    def smooth_intervals(self) -> list[tuple[float, float]]:
        return [(s.x_start, s.x_end) for s in self.segments]

    def _locate(self, x):
        """Segment containing ``x`` (right-continuous), or None on the rays."""
        if not self.segments or x < self.x_start or x >= self.x_end:
            return None
        i = int(np.searchsorted(self._starts, x, side="right")) - 1
        return self.segments[i]

    def tangent(self, x: float, side: int = 1) -> np.ndarray:
        """Unit tangent; ``side=-1`` returns the left limit at breakpoints."""
        if side < 0:
            for seg in self.segments:
                if seg.x_start < x <= seg.x_end:
                    return seg.tangent(x - seg.x_start)
            if x <= self.x_start:
                return self.initial_direction
            return self.final_direction
        if x < self.x_start:
            return self.initial_direction
        seg = self._locate(x)
        if seg is None:
            return self.final_direction
        return seg.tangent(x - seg.x_start)

    def curvature(self, x: float) -> float:
        """``|Gamma''(x)|`` (right-continuous at segment boundaries)."""
        seg = self._locate(x)
        if seg is None:
            return 0.0
        return seg.curvature(x - seg.x_start)

    def sin_inclination(self, x: float, side: int = 1) -> float:
        return float(np.clip(np.dot(self.tangent(x, side), EZ), -1.0, 1.0))

    def inclination(self, x: float, side: int = 1) -> float:
        return math.asin(self.sin_inclination(x, side))

    def is_kink(self, x: float) -> bool:
        return any(k.x == x for k in self.kinks)


def build_geometry(segments=(), **kwargs) -> PipeGeometry:
    return PipeGeometry(segments, **kwargs)


def from_curve_samples(s, points, kink_indices=()) -> PipeGeometry:
    """Geometry from sampled points ``points[i] = Gamma(s[i])``.

    ``kink_indices`` mark samples where the tangent may jump; the curve is
    split there and each piece is fitted by its own C2 spline.  The samples
    must already be parametrised by arc length: no re-fitting is attempted.
    """
    s = np.asarray(s, dtype=float)
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or P.shape[0] != s.size:
        raise GeometryError("points must be an (N, 3) array matching s")
    if np.any(np.diff(s) <= 0):
        raise GeometryError("sample parameters must be increasing")
    cuts = sorted(set(int(i) for i in kink_indices))
    if any(i <= 0 or i >= s.size - 1 for i in cuts):
        raise GeometryError("kink markers must be interior samples")
    edges = [0] + cuts + [s.size - 1]
    segs = []
    for a, b in zip(edges, edges[1:]):
        if b - a < 1:
            raise GeometryError("empty piece between kink markers")
        if b - a == 1:
            seg_s = np.array([s[a], s[b]])
            seg_p = P[[a, b]]
            seg = SampledSegment(np.linspace(seg_s[0], seg_s[1], 3),
                                 np.linspace(seg_p[0], seg_p[1], 3))
        else:
            seg = SampledSegment(s[a:b + 1], P[a:b + 1])
        dev = seg.speed_deviation()
        if dev > UNIT_SPEED_TOL:
            raise ReparametrizationError(
                f"|Gamma'| deviates from 1 by {dev:.3g} on [{s[a]}, {s[b]}]")
        segs.append(seg)
    t_in = _unit(segs[0].tangent(0.0), "tangent")
    t_in = t_in - np.dot(t_in, EZ) * EZ
    return PipeGeometry(segs, x_start=float(s[0]), initial_direction=_unit(t_in))


def tangent_variation_measure(geom: PipeGeometry, epsabs=1e-10):
    """Absolutely continuous mass ``int |Gamma''|`` and the kink atoms of ``d Gamma'``."""
    total = 0.0
    for seg in geom.segments:
        if isinstance(seg, StraightSegment):
            continue
        if isinstance(seg, ArcSegment):
            total += seg.length / seg.radius
            continue
        val, _ = integrate.quad(seg.curvature, 0.0, seg.length, epsabs=epsabs, limit=200)
        total += val
    atoms = [k.jump for k in geom.kinks]
    return total, atoms


# ---------------------------------------------------------------------------
# source coefficients


@dataclass(frozen=True)
class ConstantF:
    value: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError("f must be a finite non-negative constant")

    def __call__(self, x):
        return self.value


class TabulatedF:
    """Non-negative C1 profile in ``x`` (monotone cubic), constant beyond the table."""

    def __init__(self, x, values):
        x = np.asarray(x, dtype=float)
        v = np.asarray(values, dtype=float)
        if x.shape != v.shape or x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("f table needs >= 2 increasing abscissae")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("f values must be finite and non-negative")
        self.x, self.values = x, v
        self._interp = PchipInterpolator(x, v)

    def __call__(self, x):
        x = min(max(x, self.x[0]), self.x[-1])
        return float(self._interp(x))


@dataclass(frozen=True)
class LinearKappa:
    """``kappa(xi) = slope * |xi|``; ``slope=1`` is the identity preset."""

    slope: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and self.slope >= 0):
            raise ValueError("kappa slope must be finite and non-negative")

    def __call__(self, xi):
        return self.slope * abs(xi)


class TabulatedKappa:
    """Even C1 response interpolated on ``|xi|``; the table must start at (0, 0)."""

    def __init__(self, xi, values):
        xi = np.asarray(xi, dtype=float)
        v = np.asarray(values, dtype=float)
        if xi.shape != v.shape or xi.size < 2 or np.any(np.diff(xi) <= 0):
            raise ValueError("kappa table needs >= 2 increasing abscissae")
        if xi[0] != 0.0 or v[0] != 0.0:
            raise ValueError("kappa table must start at (0, 0)")
        if np.any(v < 0):
            raise ValueError("kappa values must be non-negative")
        self.xi, self.values = xi, v
        self._interp = PchipInterpolator(xi, v, extrapolate=True)

    def __call__(self, xi):
        return float(self._interp(abs(xi)))


@dataclass(frozen=True)
class SourceCoefficients:
    f: Callable[[float], float] = ConstantF(1.0)
    kappa: Callable[[float], float] = LinearKappa(1.0)
    g: float = 9.81

    def __post_init__(self):
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ValueError("g must be finite and non-negative")
        if self.kappa(0.0) != 0.0:
            raise ValueError("kappa(0) must vanish")

    def kink_coefficient(self, kink: Kink) -> float:
        """``f(x) kappa(2|sin(theta/2)|)`` at a kink."""
        return self.f(kink.x) * self.kappa(kink.jump)


def smooth_source(geom: PipeGeometry, coeffs: SourceCoefficients, u, x: float) -> float:
    """Distributed momentum source ``-f kappa(|Gamma''|) q - rho g sin(alpha)``."""
    rho, q = u
    return -coeffs.f(x) * coeffs.kappa(geom.curvature(x)) * q - rho * coeffs.g * geom.sin_inclination(x)
