import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reeblab import dynamics
from reeblab.catalog import CircleProfile, T3Model, handle_model
from reeblab.dynamics import (classify_level, commutator_residual, exterior_derivative, hessian_signature,
                              identity_residuals, integrate_reeb, jacobian, rational_direction, solve_y)
from reeblab.errors import DegeneracyError, DomainError, PreconditionError
from reeblab.lutz import BottProfile, alpha_a_curve, beta_curve

from .generators import random_chart


def test_richardson_jacobian_is_fourth_order():
    fn = lambda p: np.array([np.sin(p[0]) * p[1], np.exp(p[1] - p[0])])
    p = np.array([0.3, -0.7])
    exact = np.array([[np.cos(0.3) * -0.7, np.sin(0.3)], [-np.exp(-1.0), np.exp(-1.0)]])
    assert np.max(np.abs(jacobian(fn, p) - exact)) < 1e-12
    assert np.max(np.abs(jacobian(fn, p, richardson=False) - exact)) < 1e-7


def test_exterior_derivative_of_rdtheta():
    # alpha = -y dx + x dy has d alpha = 2 dx ^ dy
    W = exterior_derivative(lambda p: np.array([-p[1], p[0]]), np.array([0.4, 1.1]))
    assert np.allclose(W, [[0, 2], [-2, 0]], atol=1e-12)


def test_random_charts_satisfy_identities():
    rng = np.random.default_rng(11)
    for _ in range(5):
        m = random_chart(rng)
        res = identity_residuals(m, 100, seed=1)
        assert res["alpha_R_minus_1"] < 1e-12
        assert res["i_R_dalpha"] < 1e-6
        assert res["min_signed_volume"] > 0


def test_solve_y_matches_closed_form():
    m = random_chart(np.random.default_rng(5))
    for p in m.sample(np.random.default_rng(0), 20):
        assert np.allclose(solve_y(m, p), m.y_field(p), atol=1e-10)


def test_commutator_vanishes_on_charts():
    m = random_chart(np.random.default_rng(2))
    res = commutator_residual(m, 50, seed=0)
    assert res["max_norm"] < 1e-6


def test_rational_direction():
    assert rational_direction(2.0, 4.0) == (1, 2)
    assert rational_direction(-3.0, 1.0) == (-3, 1)
    assert rational_direction(1.0, math.sqrt(2)) is None


def test_classify_level_alpha_a():
    prof = BottProfile.from_functions(lambda r: r * r, lambda r: 2 * r, 0.05, 1.0)
    lvl = classify_level(alpha_a_curve(), prof, 0.5)
    # R = (h2', -h1')/delta = (1, 0): every orbit closes along x1
    assert lvl.closed and lvl.period_class == (1, 0)
    with pytest.raises(DomainError):
        classify_level(alpha_a_curve(), prof, 1.0)


def test_classify_level_finds_critical_torus():
    prof = BottProfile.from_functions(lambda r: (r - 0.5) ** 2, lambda r: 2 * (r - 0.5), 0.05, 1.0)
    lvl = classify_level(alpha_a_curve(), prof, 0.5)
    assert isinstance(lvl, dynamics.CriticalTorus)
    assert lvl.second_derivative == pytest.approx(2.0)


def test_classify_level_irrational_slope_on_beta():
    c = beta_curve(1)
    prof = BottProfile.from_functions(lambda z: z, lambda z: 1 + 0 * z, 0.0, 1.0)
    z = 1 / 8
    lvl = classify_level(c, prof, z)
    assert lvl.closed and lvl.period_class == (1, -1)
    lvl = classify_level(c, prof, 0.1)
    assert not lvl.closed and lvl.note == "no closure found at resolution"


def test_hessian_signature():
    assert hessian_signature(lambda u, v: u * u + 3 * v * v).kind == "elliptic"
    rep = hessian_signature(lambda u, v: u * u - v * v)
    assert rep.kind == "hyperbolic" and rep.signature == ("+", "-")
    with pytest.raises(DegeneracyError):
        hessian_signature(lambda u, v: u * u + v**4)


def test_t3_flow_conserves_f_exactly():
    m = T3Model(2)
    traj = integrate_reeb(m, [0.1, 0.2, 0.3], 5.0, 1e-2)
    assert traj.drift == 0.0
    assert traj.states.shape[1] == 3 and len(traj.times) == 501


def test_integrate_rejects_start_outside_domain():
    m = handle_model()
    with pytest.raises(DomainError):
        integrate_reeb(m, [1.0, 0.0, 0.0, 0.99], 1.0)


def test_flow_stops_at_domain_boundary():
    m = handle_model()
    # off the belt the t coordinate runs away and the orbit leaves |t| < 0.95
    p = m.point(np.array([0.0, 0.6, 0.8]), 0.3)
    traj = integrate_reeb(m, p, 200.0, 1e-2)
    assert traj.boundary and traj.times[-1] < 200.0


def test_rescale_needs_symmetry_field():
    m = random_chart(np.random.default_rng(0))
    with pytest.raises(PreconditionError):
        dynamics.rescale_check(m, 5)


def test_rescale_check_on_t3():
    m = T3Model(1, CircleProfile(offset=2.0))
    assert dynamics.rescale_check(m, 50) < 1e-8


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=10, deadline=None)
def test_volume_sign_matches_orientation(seed):
    m = random_chart(np.random.default_rng(seed))
    p = m.sample(np.random.default_rng(seed), 1)[0]
    assert m.orientation_sign * dynamics.volume(m, p) > 0
