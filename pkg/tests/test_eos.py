import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvedpipe.eos import (
    GammaLaw,
    PreissmannLaw,
    State,
    check_state,
    dynamic_pressure,
    entropy,
    entropy_flux,
    is_subsonic,
    margin,
    preissmann_height,
    pressure,
    sound_speed,
)
from curvedpipe.errors import DegenerateLawError, DomainError

# Slot-law pressures for r = 1, d = 0.1, g = 9.81 from a 30-digit quadrature
# of g * int_0^a (h(a) - h(alpha)) d alpha.
SLOT_P_HALF_DISC = 5.13650398861931194
SLOT_P_ONE = 2.60908251382536971
SLOT_P_SLOT = 147.086969473316645


def slot_pressure_oracle(law, a):
    r, d, g = law.radius, law.slot_width, law.g
    mpmath.mp.dps = 30
    h = lambda x: preissmann_height(r, d, float(x))
    a1 = math.pi * r * r / 2
    a2 = math.pi * r * r - d * d / (2 * math.pi)
    pts = [0] + [b for b in (a1, a2) if b < a] + [a]
    ha = h(a)
    return float(g * mpmath.quad(lambda x: ha - h(x), pts))


class TestPressure:
    def test_gamma_unit_density(self, gamma2):
        assert pressure(gamma2, 1.0) == 1.0

    def test_vacuum_rejected(self, gamma14):
        with pytest.raises(DomainError):
            pressure(gamma14, 0.0)

    def test_negative_density_rejected(self, slot_law):
        with pytest.raises(DomainError):
            pressure(slot_law, -1.0)

    def test_out_of_declared_range_fails_loudly(self):
        law = GammaLaw(1.4, rho_min=0.1, rho_max=10.0)
        with pytest.raises(DomainError):
            law.p(20.0)

    @pytest.mark.parametrize("a, expected", [
        (math.pi / 2, SLOT_P_HALF_DISC),
        (1.0, SLOT_P_ONE),
        (3.5, SLOT_P_SLOT),
    ])
    def test_slot_law_frozen_values(self, slot_law, a, expected):
        assert pressure(slot_law, a) == pytest.approx(expected, rel=1e-12, abs=1e-10)

    @pytest.mark.parametrize("a", [0.01, 0.7, 2.0, 3.0, 3.14, 3.1411, 5.0, 20.0])
    def test_slot_law_matches_quadrature(self, slot_law, a):
        assert abs(slot_law.p(a) - slot_pressure_oracle(slot_law, a)) <= 1e-10 * max(1.0, slot_law.p(a))

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            GammaLaw(0.5)
        with pytest.raises(ValueError):
            PreissmannLaw(radius=1.0, slot_width=1.5)


class TestSoundSpeed:
    def test_gamma2(self, gamma2):
        assert sound_speed(gamma2, 2.0) == 2.0

    def test_isothermal(self):
        assert sound_speed(GammaLaw(1.0), 5.0) == 1.0

    @pytest.mark.parametrize("a", [1.0, 2.5, 3.2])
    def test_slot_law_finite_difference(self, slot_law, a):
        h = 1e-5
        fd = math.sqrt((slot_law.p(a + h) - slot_law.p(a - h)) / (2 * h))
        assert abs(fd - sound_speed(slot_law, a)) <= 1e-6

    def test_degenerate_law(self):
        class Flat(GammaLaw):
            def _dp(self, rho):
                return 0.0

        with pytest.raises(DegenerateLawError):
            sound_speed(Flat(2.0), 1.0)


class TestDynamicPressureAndEntropy:
    def test_rest_state(self, gamma2):
        assert dynamic_pressure(gamma2, (1.0, 0.0)) == 1.0

    def test_moving_state(self, gamma2):
        assert dynamic_pressure(gamma2, (2.0, 2.0)) == 6.0

    def test_slot_law(self, slot_law):
        assert dynamic_pressure(slot_law, (1.0, 0.3)) == pytest.approx(0.09 + SLOT_P_ONE, rel=1e-12)

    def test_reference_state_has_zero_energy(self, gamma14):
        assert entropy(gamma14, (1.0, 0.0)) == 0.0
        assert entropy_flux(gamma14, (1.0, 0.0)) == 0.0

    def test_gamma2_energy(self, gamma2):
        assert entropy(gamma2, (2.0, 0.0)) == pytest.approx(2.0, rel=1e-15)

    def test_isothermal_energy_against_quadrature(self):
        law = GammaLaw(1.0)
        e = math.e
        u = (e, e)
        E_oracle = e / 2 + e * float(mpmath.quad(lambda r: r / r ** 2, [1, e]))
        F_oracle = 1.0 * (E_oracle + e)
        assert entropy(law, u) == pytest.approx(E_oracle, abs=1e-10)
        assert entropy_flux(law, u) == pytest.approx(F_oracle, abs=1e-10)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 3.5])
    def test_slot_internal_energy_against_quadrature(self, slot_law, a):
        # pressure itself is checked against quadrature above; integrate it
        # piecewise so the kinks of p' at the branch points are resolved
        lo, hi = sorted((1.0, a))
        pts = [lo] + [b for b in (slot_law.a1, slot_law.a2) if lo < b < hi] + [hi]
        mpmath.mp.dps = 20
        val = float(mpmath.quad(lambda r: slot_law._p(float(r)) / float(r) ** 2, pts))
        oracle = a * (val if a >= 1.0 else -val)
        assert slot_law.internal_energy(a) == pytest.approx(oracle, abs=1e-10)


class TestSubsonic:
    def test_rest(self, gamma14, slot_law):
        assert is_subsonic(gamma14, (1.0, 0.0))
        assert is_subsonic(slot_law, (1.0, 0.0))

    def test_boundary_is_excluded(self, gamma2):
        assert not is_subsonic(gamma2, (2.0, 4.0))
        assert margin(gamma2, (2.0, 4.0)) == 0.0

    def test_gamma14_inside(self, gamma14):
        # sqrt(1.4) = 1.1832 > 1.1
        assert math.sqrt(1.4) > 1.1
        assert is_subsonic(gamma14, (1.0, 1.1))
        assert margin(gamma14, (1.0, 1.1)) == pytest.approx(math.sqrt(1.4) - 1.1, rel=1e-14)


class TestHeight:
    def test_half_disc(self):
        assert preissmann_height(1.0, 0.1, math.pi / 2) == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("r, d", [(1.0, 0.1), (0.5, 0.02), (2.0, 0.3)])
    def test_slot_entry_continuity(self, r, d):
        a2 = math.pi * r * r - d * d / (2 * math.pi)
        mid = 2 * r - math.sqrt(max(2 * r * r - 2 * a2 / math.pi, 0.0))
        top = a2 / d - d / (2 * math.pi) + 2 * r - math.pi * r * r / d
        assert mid == pytest.approx(2 * r - d / math.pi, abs=1e-12)
        assert top == pytest.approx(2 * r - d / math.pi, abs=1e-12)
        for a in (a2 * (1 - 1e-15), a2, a2 * (1 + 1e-15)):
            assert abs(preissmann_height(r, d, a) - (2 * r - d / math.pi)) <= 1e-12

    def test_first_branch(self):
        assert preissmann_height(1.0, 0.05, 0.5) == pytest.approx(math.sqrt(1 / math.pi), rel=1e-15)

    @given(r=st.floats(0.1, 5.0), frac=st.floats(0.01, 0.9))
    def test_continuity_at_both_branch_points(self, r, frac):
        d = frac * r
        a1 = math.pi * r * r / 2
        a2 = math.pi * r * r - d * d / (2 * math.pi)
        # h' <= 2/d everywhere, so neighbouring floats may differ by at most
        # that slope times the spacing once the branches agree
        for a in (a1, a2):
            lo = preissmann_height(r, d, np.nextafter(a, 0.0))
            hi = preissmann_height(r, d, np.nextafter(a, np.inf))
            slope_gap = 2.0 / d * (np.nextafter(a, np.inf) - np.nextafter(a, 0.0))
            assert abs(hi - lo) <= 1e-12 + slope_gap


class TestStateValidation:
    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            check_state((float("nan"), 0.0))

    def test_rejects_vacuum(self):
        with pytest.raises(DomainError):
            check_state((0.0, 1.0))

    def test_velocity(self):
        assert State(2.0, 3.0).v == 1.5


LAWS = [GammaLaw(1.0), GammaLaw(1.4), GammaLaw(2.0), GammaLaw(3.0),
        PreissmannLaw(radius=1.0, slot_width=0.1), PreissmannLaw(radius=0.5, slot_width=0.05, g=1.0)]


@pytest.mark.parametrize("law", LAWS, ids=lambda l: repr(l)[:40])
def test_convexity_sampling(law):
    rhos = np.logspace(-3, 1.5, 400)
    for r in rhos:
        h = 1e-4 * r
        d1 = (law.p(r + h) - law.p(r - h)) / (2 * h)
        d2 = (law.p(r + h) - 2 * law.p(r) + law.p(r - h)) / (h * h)
        assert d1 >= -1e-12
        assert d2 >= -1e-10 * max(1.0, abs(law.p(r)) / (h * h) * 1e-14)
        assert law.dp(r) > 0
        assert law.d2p(r) >= 0


@pytest.mark.parametrize("law", LAWS[:3] + LAWS[4:5], ids=lambda l: repr(l)[:40])
@given(rho=st.floats(0.2, 3.0), frac=st.floats(-0.95, 0.95))
def test_entropy_compatibility(law, rho, frac):
    q = frac * rho * law.c(rho)
    u = (rho, q)
    E = entropy(law, u)
    assert entropy_flux(law, u) == pytest.approx(q / rho * (E + law.p(rho)), rel=1e-13, abs=1e-13)
    h = 1e-5
    dE = (entropy(law, (rho, q + h)) - entropy(law, (rho, q - h))) / (2 * h)
    assert abs(dE - q / rho) <= 1e-8


@pytest.mark.parametrize("law", LAWS, ids=lambda l: repr(l)[:40])
@given(rho=st.floats(0.2, 3.0), frac=st.floats(-0.95, 0.95))
def test_dynamic_pressure_monotone_when_subsonic(law, rho, frac):
    q = frac * rho * law.c(rho)
    assert is_subsonic(law, (rho, q))
    h = 1e-6 * rho
    dP = (dynamic_pressure(law, (rho + h, q)) - dynamic_pressure(law, (rho - h, q))) / (2 * h)
    assert dP > 0


@given(rho=st.floats(0.05, 5.0))
def test_riemann_invariant_integrand(rho):
    law = PreissmannLaw(radius=1.0, slot_width=0.1)
    h = 1e-6 * rho
    fd = (law.ell(rho + h) - law.ell(rho - h)) / (2 * h)
    assert fd == pytest.approx(law.c(rho) / rho, rel=1e-6)
