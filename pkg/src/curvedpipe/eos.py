"""Pressure laws and the thermodynamic quantities of the p-system.

Two laws are provided: the polytropic law ``p = rho**gamma`` and the
hydrostatic pressure of a circular pipe with a Preissmann slot, where the
role of the density is played by the wetted area ``a``.

Hot-path evaluations (pressure, derivatives, the Riemann-invariant integral)
are closed form; quadrature only appears in the entropy integral of the slot
law, which is a diagnostic quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import DegenerateLawError, DomainError

__all__ = [
    "State",
    "PressureLaw",
    "GammaLaw",
    "PreissmannLaw",
    "pressure",
    "sound_speed",
    "dynamic_pressure",
    "entropy",
    "entropy_flux",
    "is_subsonic",
    "margin",
    "preissmann_height",
    "check_state",
]

GAMMA_ONE_RTOL = 1e-14


class State(NamedTuple):
    """Conserved pair (density, momentum) at a point."""

    rho: float
    q: float

    @property
    def v(self) -> float:
        return self.q / self.rho


def check_state(u) -> State:
    """Validate and normalise a state-like pair."""
    rho, q = float(u[0]), float(u[1])
    if not (math.isfinite(rho) and math.isfinite(q)):
        raise DomainError(f"non-finite state ({rho}, {q})")
    if rho <= 0.0:
        raise DomainError(f"density must be positive, got {rho}")
    return State(rho, q)


@dataclass(frozen=True, kw_only=True)
class PressureLaw:
    """Convex pressure law ``p(rho)`` on ``[rho_min, rho_max]``.

    Subclasses implement ``_p``, ``_dp``, ``_d2p`` and ``_ell`` (an
    antiderivative of ``c(r) / r``) without range checks; the public methods
    check the admissible range and never clamp silently.
    """

    rho_ref: float = 1.0
    rho_min: float = 1e-8
    rho_max: float = 1e8

    def __post_init__(self):
        if not self.rho_ref > 0:
            raise ValueError("rho_ref must be positive")
        if not 0 < self.rho_min < self.rho_max:
            raise ValueError("need 0 < rho_min < rho_max")

    def check(self, rho: float) -> float:
        if not rho > 0.0:
            raise DomainError(f"density must be positive, got {rho}")
        if rho < self.rho_min or rho > self.rho_max:
            raise DomainError(
                f"density {rho} outside admissible range [{self.rho_min}, {self.rho_max}]"
            )
        return rho

    def p(self, rho: float) -> float:
        return self._p(self.check(rho))

    def dp(self, rho: float) -> float:
        return self._dp(self.check(rho))

    def d2p(self, rho: float) -> float:
        return self._d2p(self.check(rho))

    def c(self, rho: float) -> float:
        d = self._dp(self.check(rho))
        if not d > 0.0:
            raise DegenerateLawError(f"p'({rho}) = {d} is not positive")
        return math.sqrt(d)

    def ell(self, rho: float) -> float:
        """Antiderivative of ``c(r)/r``: the Riemann-invariant integral."""
        return self._ell(self.check(rho))

    def internal_energy(self, rho: float) -> float:
        """``rho * int_{rho_ref}^{rho} p(r)/r**2 dr``."""
        rho = self.check(rho)
        # p' jumps at branch points of piecewise laws; split there
        lo, hi = sorted((self.rho_ref, rho))
        pts = [b for b in self._kinks() if lo < b < hi]
        val, _ = integrate.quad(lambda r: self._p(r) / (r * r), lo, hi, points=pts or None,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return rho * (val if rho >= self.rho_ref else -val)

    def _kinks(self):
        """Densities where the law switches formula."""
        return ()

    # subclasses
    def _p(self, rho):  # pragma: no cover - abstract
        raise NotImplementedError

    def _dp(self, rho):  # pragma: no cover - abstract
        raise NotImplementedError

    def _d2p(self, rho):  # pragma: no cover - abstract
        raise NotImplementedError

    def _ell(self, rho):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class GammaLaw(PressureLaw):
    """Polytropic law ``p = rho**gamma``, ``gamma >= 1``."""

    gamma: float = 1.4

    def __post_init__(self):
        super().__post_init__()
        if not (math.isfinite(self.gamma) and self.gamma >= 1.0):
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    @cached_property
    def isothermal(self) -> bool:
        return abs(self.gamma - 1.0) <= GAMMA_ONE_RTOL

    def _p(self, rho):
        return rho ** self.gamma

    def _dp(self, rho):
        if self.isothermal:
            return 1.0
        return self.gamma * rho ** (self.gamma - 1.0)

    def _d2p(self, rho):
        if self.isothermal:
            return 0.0
        g = self.gamma
        return g * (g - 1.0) * rho ** (g - 2.0)

    def _ell(self, rho):
        if self.isothermal:
            return math.log(rho)
        g = self.gamma
        return 2.0 * math.sqrt(g) / (g - 1.0) * rho ** (0.5 * (g - 1.0))

    def internal_energy(self, rho):
        rho = self.check(rho)
        if self.isothermal:
            return rho * math.log(rho / self.rho_ref)
        g = self.gamma
        return rho * (rho ** (g - 1.0) - self.rho_ref ** (g - 1.0)) / (g - 1.0)


def preissmann_height(r: float, d: float, a: float) -> float:
    """Water height for wetted area ``a`` in a pipe of radius ``r`` with slot ``d``."""
    if not a > 0.0:
        raise DomainError(f"wetted area must be positive, got {a}")
    a1 = 0.5 * math.pi * r * r
    a2 = math.pi * r * r - d * d / (2.0 * math.pi)
    if a <= a1:
        return math.sqrt(2.0 * a / math.pi)
    if a <= a2:
        return 2.0 * r - math.sqrt(max(2.0 * r * r - 2.0 * a / math.pi, 0.0))
    return a / d - d / (2.0 * math.pi) + 2.0 * r - math.pi * r * r / d


# Gauss-Legendre nodes for the middle branch of the slot law's invariant.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class PreissmannLaw(PressureLaw):
    """Hydrostatic pressure ``g * int_0^a (h(a) - h(alpha)) d alpha``.

    ``h`` is the water height of a circular pipe of radius ``radius`` topped
    by a Preissmann slot of width ``slot_width``.
    """

    radius: float = 1.0
    slot_width: float = 0.1
    g: float = 9.81

    def __post_init__(self):
        super().__post_init__()
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 < self.slot_width < self.radius:
            raise ValueError("slot_width must lie in (0, radius)")
        if not self.g > 0:
            raise ValueError("g must be positive for the hydrostatic law")

    @property
    def a1(self) -> float:
        return 0.5 * math.pi * self.radius ** 2

    @property
    def a2(self) -> float:
        return math.pi * self.radius ** 2 - self.slot_width ** 2 / (2.0 * math.pi)

    def _kinks(self):
        return (self.a1, self.a2)

    def height(self, a: float) -> float:
        return preissmann_height(self.radius, self.slot_width, a)

    def _S(self, a):
        # sqrt(2 r^2 - 2 a / pi) on the middle branch
        return math.sqrt(max(2.0 * self.radius ** 2 - 2.0 * a / math.pi, 0.0))

    def height_integral(self, a: float) -> float:
        """``int_0^a h(alpha) d alpha`` in closed form."""
        r, d = self.radius, self.slot_width
        a1, a2 = self.a1, self.a2
        c1 = math.sqrt(2.0 / math.pi) * 2.0 / 3.0
        if a <= a1:
            return c1 * a ** 1.5
        H1 = c1 * a1 ** 1.5

        def mid(x):
            return H1 + 2.0 * r * (x - a1) + math.pi / 3.0 * (self._S(x) ** 3 - r ** 3)

        if a <= a2:
            return mid(a)
        C = 2.0 * r - d / (2.0 * math.pi) - math.pi * r * r / d
        return mid(a2) + (a * a - a2 * a2) / (2.0 * d) + C * (a - a2)

    def _p(self, a):
        if a <= self.a1:
            return self.g * math.sqrt(2.0 / math.pi) * a ** 1.5 / 3.0
        return self.g * (a * self.height(a) - self.height_integral(a))

    def _dp(self, a):
        # p' = g a h'(a)
        if a <= self.a1:
            return self.g * math.sqrt(a / (2.0 * math.pi))
        if a <= self.a2:
            return self.g * a / (math.pi * self._S(a))
        return self.g * a / self.slot_width

    def _d2p(self, a):
        if a <= self.a1:
            return self.g / (2.0 * math.sqrt(2.0 * math.pi * a))
        if a <= self.a2:
            S = self._S(a)
            return self.g / (math.pi * S) * (1.0 + a / (math.pi * S * S))
        return self.g / self.slot_width

    def _ell_first(self, a):
        return 2.0 * math.sqrt(2.0 * self.g) * (2.0 * a / math.pi) ** 0.25

    def _ell_mid(self, a):
        # substitution t = S(a)**0.5 turns the integrand into a smooth one
        r = self.radius
        t_hi = math.sqrt(r)
        t_lo = math.sqrt(self._S(a))
        half = 0.5 * (t_hi - t_lo)
        t = t_lo + half * (_GL_X + 1.0)
        vals = 2.0 * t * t * math.sqrt(2.0 * self.g) / np.sqrt(2.0 * r * r - t ** 4)
        return self._ell_first(self.a1) + half * float(np.dot(_GL_W, vals))

    def _ell(self, a):
        if a <= self.a1:
            return self._ell_first(a)
        if a <= self.a2:
            return self._ell_mid(a)
        a2 = self.a2
        return self._ell_mid(a2) + 2.0 * math.sqrt(self.g / self.slot_width) * (
            math.sqrt(a) - math.sqrt(a2)
        )


# ---------------------------------------------------------------------------
# functional interface


def pressure(law: PressureLaw, rho: float) -> float:
    return law.p(rho)


def sound_speed(law: PressureLaw, rho: float) -> float:
    """``sqrt(p'(rho))``; raises ``DegenerateLawError`` when ``p'`` vanishes."""
    return law.c(rho)


def dynamic_pressure(law: PressureLaw, u) -> float:
    """Momentum flux ``q**2/rho + p(rho)``."""
    rho, q = u
    return q * q / rho + law.p(rho)


def entropy(law: PressureLaw, u) -> float:
    """Mathematical entropy ``q**2/(2 rho) + rho int_{rho_ref}^rho p(r)/r dr``."""
    rho, q = u
    return 0.5 * q * q / rho + law.internal_energy(rho)


def entropy_flux(law: PressureLaw, u) -> float:
    rho, q = u
    return q / rho * (entropy(law, u) + law.p(rho))


def margin(law: PressureLaw, u) -> float:
    """Signed distance to the sonic line, positive inside the subsonic region."""
    rho, q = u
    return law.c(rho) - abs(q / rho)


def is_subsonic(law: PressureLaw, u) -> bool:
    return margin(law, u) > 0.0
