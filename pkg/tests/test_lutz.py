import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reeblab.errors import (DegenerateFormError, DomainError, IncompatibleGermsError, InvalidSiteError,
                            NotEllipticError)
from reeblab.lutz import (BottProfile, CollarGerm, LutzCurve, alpha_a_curve, beta_curve, check_contact,
                          create_orbit_pair, delta, find_critical_radii, lutz_twist, normalize_elliptic_germ,
                          reeb_direction, sew, winding, y_field)
from reeblab.piecewise import PiecewiseCubic

from .generators import random_pair


def test_alpha_a_delta_is_2r():
    c = alpha_a_curve()
    r = np.linspace(0.05, 1, 11)
    assert np.allclose(delta(c, r), 2 * r)
    assert check_contact(c).passed


@pytest.mark.parametrize("n", [1, 2, 3])
def test_beta_delta_is_minus_2pi_n(n):
    c = beta_curve(n)
    r = np.linspace(0, 1, 101)
    # Hermite interpolation of cos/sin: fourth-order accurate on 512 n knots
    assert np.allclose(delta(c, r), -2 * math.pi * n, rtol=1e-6)
    rep = check_contact(c)
    assert rep.passed and rep.orientation_sign == -1


def test_check_contact_locates_crossing():
    # (1, 0.25 r - r^2) has delta = 0.25 - 2r, zero at r = 0.125
    c = LutzCurve.polynomial([1.0], [0.0, 0.25, -1.0], 0.0, 1.0, +1, origin=0.0)
    rep = check_contact(c)
    assert not rep.passed
    assert rep.crossing == pytest.approx(0.125, abs=1e-10)


def test_reeb_and_y_fields_satisfy_defining_identities():
    c = alpha_a_curve()
    prof = BottProfile.from_functions(lambda r: r**2, lambda r: 2 * r, 0.05, 1.0)
    r = np.linspace(0.1, 0.9, 9)
    R1, R2 = reeb_direction(c, r)
    h1, h2, d1, d2 = c.jet(r)
    assert np.allclose(h1 * R1 + h2 * R2, 1.0)
    assert np.allclose(d1 * R1 + d2 * R2, 0.0)
    Y1, Y2 = y_field(c, prof, r)
    # i_Y d alpha = -(h1' Y1 + h2' Y2) dr, which must equal -df
    assert np.allclose(d1 * Y1 + d2 * Y2, 2 * r)
    assert np.allclose(h1 * Y1 + h2 * Y2, 0.0)


def test_json_roundtrip():
    c = beta_curve(2)
    back = LutzCurve.from_json(c.to_json())
    r = np.linspace(0, 1, 77)
    assert np.array_equal(back.h1(r), c.h1(r)) and back.orientation_sign == -1


def test_sew_matches_germs_and_stays_contact():
    rng = np.random.default_rng(7)
    for _ in range(40):
        left, right = random_pair(rng)
        curve = sew(left, right)
        assert check_contact(curve, 2048).passed
        for g in (left, right):
            r = g.curve.sample_radii(17)
            assert np.max(np.abs(np.array(curve.jet(r)) - np.array(g.curve.jet(r)))) < 1e-9


def test_sew_extra_turns_adds_full_turns():
    rng = np.random.default_rng(3)
    left, right = random_pair(rng)
    s0, _ = winding(sew(left, right))
    s2, _ = winding(sew(left, right, "extra_turns(2)"))
    assert (s2 - s0) * left.orientation_sign == pytest.approx(4 * math.pi, abs=1e-6)


def test_sew_rejects_mixed_orientation():
    left = CollarGerm.from_jet("left", [1, 0, 0, 1], +1)
    right = CollarGerm.from_jet("right", [1, 0, 0, -1], -1)
    with pytest.raises(IncompatibleGermsError):
        sew(left, right)


def test_germ_validate_rejects_degenerate_jet():
    g = CollarGerm.from_jet("left", [1, 0, 1, 0], +1)  # radial line, delta = 0
    with pytest.raises(DegenerateFormError):
        g.validate()


@pytest.mark.parametrize("kind,extra", [("full", 2 * math.pi), ("simple", math.pi)])
def test_lutz_twist_adds_sweep(kind, extra):
    c = alpha_a_curve(0.05, 1.0)
    t = lutz_twist(c, 0.5, kind, width=0.1)
    assert check_contact(t).passed
    s0, _ = winding(c.restrict(0.4, 0.6), 256)
    s1, _ = winding(t.restrict(0.4, 0.6), 256)
    assert s1 - s0 == pytest.approx(extra, abs=1e-6)
    r = np.linspace(0.05, 0.39, 5)
    assert np.allclose(t.h1(r), c.h1(r)) and np.allclose(t.h2(r), c.h2(r))
    r = np.linspace(0.61, 1.0, 5)
    sgn = 1.0 if kind == "full" else -1.0
    assert np.allclose(t.h1(r), sgn * c.h1(r), atol=1e-12)


def test_lutz_twist_rejects_critical_collar():
    c = alpha_a_curve(0.05, 1.0)
    prof = BottProfile.from_functions(lambda r: (r - 0.5) ** 2, lambda r: 2 * (r - 0.5), 0.05, 1.0)
    with pytest.raises(InvalidSiteError):
        lutz_twist(c, 0.5, "full", width=0.1, profile=prof)


def test_find_critical_radii_against_closed_form():
    prof = BottProfile.from_functions(np.cos, lambda r: -np.sin(r), 0.5, 7.0, knots=512)
    radii = find_critical_radii(prof.f)
    assert [round(r, 6) for r, _ in radii] == [round(math.pi, 6), round(2 * math.pi, 6)]
    assert [s for _, s in radii] == [1, -1]


def test_normalize_elliptic_germ():
    # h1 = 1 + r, h2 = 2 r^2: elliptic at r = 0, delta = 4r + 2r^2 > 0
    c = LutzCurve.polynomial([1.0, 1.0], [0.0, 0.0, 2.0], 0.0, 1.0, +1, origin=0.0)
    out, log = normalize_elliptic_germ(c)
    da = log[-1]["model_radius"]
    r = np.linspace(0, da, 11)
    assert np.allclose(out.h1(r), 1.0) and np.allclose(out.h2(r), r**2)
    r = np.linspace(log[-1]["unchanged_from"], 1.0, 11)
    assert np.allclose(out.h1(r), c.h1(r)) and np.allclose(out.h2(r), c.h2(r))
    assert all(e.get("path_min_signed_delta", 1.0) > 0 for e in log)
    rr = out.sample_radii(2048)
    assert np.all(delta(out, rr[rr > 0]) > 0)


def test_normalize_rejects_non_elliptic():
    c = LutzCurve.polynomial([1.0], [0.5, 1.0], 0.0, 1.0, +1)
    with pytest.raises(NotEllipticError):
        normalize_elliptic_germ(c)
    with pytest.raises(DomainError):
        normalize_elliptic_germ(alpha_a_curve(0.1, 1.0))


def test_create_orbit_pair():
    c = alpha_a_curve(0.05, 1.0)
    prof = BottProfile.from_functions(lambda r: r**2, lambda r: 2 * r, 0.05, 1.0)
    new, fs = create_orbit_pair(c, prof, 0.5, 0.05)
    assert check_contact(new).passed
    kinds = sorted(k for _, _, k in fs.new_critical_points)
    assert kinds == ["elliptic", "hyperbolic"]
    # outside the ball f* agrees with f
    assert fs(0.8, 1.0) == pytest.approx(prof.f(0.8))
    # the Bott condition: on the modified collar R = d/dx2 and f* does not depend on x2
    R1, R2 = reeb_direction(new, np.array([0.5]))
    assert abs(R1[0]) < 1e-12


def test_create_orbit_pair_rejects_critical_site():
    c = alpha_a_curve(0.05, 1.0)
    prof = BottProfile.from_functions(lambda r: (r - 0.5) ** 2, lambda r: 2 * (r - 0.5), 0.05, 1.0)
    with pytest.raises(InvalidSiteError):
        create_orbit_pair(c, prof, 0.5, 0.05)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_sew_property_contact_and_jets(seed):
    left, right = random_pair(np.random.default_rng(seed))
    curve = sew(left, right)
    rep = check_contact(curve, 2048)
    assert rep.passed
    assert curve.h1(left.endpoint) == pytest.approx(left.values[0], abs=1e-9)
    assert curve.h2(right.endpoint) == pytest.approx(right.values[1], abs=1e-9)


def test_degenerate_critical_point_has_zero_sign():
    f = PiecewiseCubic.polynomial([0, 0, 0, 1], -1.0, 1.0, origin=0.0)  # r^3
    assert find_critical_radii(f) == [(0.0, 0)]


def test_profile_validate_catches_stale_radii():
    prof = BottProfile.from_functions(lambda r: r**2, lambda r: 2 * r, -1.0, 1.0)
    BottProfile(prof.f, prof.critical_radii).validate()
    with pytest.raises(ValueError):
        BottProfile(prof.f, ((0.3, 1),)).validate()
