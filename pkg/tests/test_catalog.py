import json
import math

import numpy as np
import pytest

from reeblab import catalog
from reeblab.catalog import (CircleProfile, HandleModel, KleinModel, OpenBookModel, S3Model, T3Model, build,
                             hopf_map, model_from_json, model_to_json, s3_frames)
from reeblab.dynamics import bott_residual, identity_residuals
from reeblab.errors import ConfigError, ModelInvalidError


def unit_points(n, seed=0):
    p = np.random.default_rng(seed).standard_normal((n, 4))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def test_hopf_map_lands_on_unit_sphere():
    for p in unit_points(50):
        assert np.linalg.norm(hopf_map(p)) == pytest.approx(1.0, abs=1e-14)


def test_s3_frames():
    for p in unit_points(200, seed=3):
        fr = s3_frames(p)
        assert fr.sum_residual < 1e-12
        assert fr.gram_residual < 1e-12
        assert abs(fr.frame_det) > 1e-3
        assert fr.wedge_residual < 1e-12
    with pytest.raises(ModelInvalidError):
        s3_frames([1.0, 1.0, 0.0, 0.0])


def test_s3_reeb_is_hopf_action():
    m = S3Model()
    p = unit_points(1)[0]
    assert np.allclose(m.reeb(p), catalog.I_OP @ p)
    assert m.orientation_sign * identity_residuals(m, 50)["min_signed_volume"] > 0
    comps = m.critical_components()
    assert [c.type for c in comps] == ["EllipticOrbit", "EllipticOrbit"]
    assert sorted(c.signature for c in comps) == [("+", "+"), ("-", "-")]


def test_t3_critical_tori_match_sign_change_scan():
    for m_ in (1, 2, 3):
        prof = CircleProfile(m=m_, phase=0.3)
        z = np.linspace(0, 1, 100001)
        d = prof(z, 1)
        scan = z[:-1][np.sign(d[:-1]) != np.sign(d[1:])]
        found = sorted(z for z, _ in prof.critical_points())
        assert len(found) == len(scan) == 2 * m_
        assert np.allclose(found, scan, atol=2e-5)


def test_t3_constant_profile_rejected():
    with pytest.raises(ModelInvalidError):
        T3Model(1, CircleProfile(m=0))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_t3_bott_residual(n):
    assert bott_residual(T3Model(n), 500) < 1e-12


def test_handle_radius_matches_closed_form():
    # oracle: h = rho - rho0 - t^2/(1 - t^2) is linear in rho
    for rho0 in (0.5, 1.0, 2.0):
        m = HandleModel(rho0)
        t = np.linspace(-0.9, 0.9, 37)
        assert np.allclose(m.radius_squared(t), rho0 + t * t / (1 - t * t), atol=1e-12)


def test_handle_surface_and_reeb():
    m = HandleModel()
    pts = m.sample(np.random.default_rng(0), 200)
    assert max(abs(m.H(p)) for p in pts) < 1e-12
    for p in pts[:20]:
        R = m.reeb(p)
        assert abs(m.grad_H(p) @ R) < 1e-12
        assert m.alpha(p) @ R == pytest.approx(1.0)
    assert m.min_dH_Y(2000) > 0


def test_handle_census():
    comps = HandleModel().census()
    kinds = sorted(c.type for c in comps)
    assert kinds == ["EllipticOrbit", "EllipticOrbit", "HyperbolicOrbit"]
    belt = next(c for c in comps if c.location["component"] == "belt")
    assert belt.signature == ("+", "-")
    assert min(belt.hessian) == pytest.approx(-2.0, abs=1e-6)


def test_handle_rejects_concave_neck():
    with pytest.raises(ModelInvalidError):
        HandleModel(h=lambda rho, t: rho - 1.0 + 0.5 * t * t)


def test_klein_fibres():
    m = KleinModel(0.1)
    comps = m.critical_fibers()
    assert len(comps) == 2
    evs = sorted(tuple(sorted(c.hessian)) for c in comps)
    assert evs[0][0] == pytest.approx(-0.01, rel=0.05) and evs[1][0] == pytest.approx(0.01, rel=0.05)
    assert m.quotient_residual() == 0.0


def test_klein_unperturbed_rank_drop():
    m = KleinModel(0.1, perturbed=False)
    rd = m.rank_drop(64)
    assert rd["all_critical"] and rd["hessian_ranks"] == [1]
    assert [c.type for c in m.critical_components()] == ["KleinBottle"]


def test_klein_rejects_odd_bump():
    with pytest.raises(ModelInvalidError):
        KleinModel(0.1, chi=lambda r: 0.01 * r, dchi=lambda r: 0.01 + 0 * r)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_openbook(g):
    m = OpenBookModel(g)
    assert m.exactness_residual(200) < 1e-9
    assert len(m.page_morse()) == 2 * g + 2
    assert m.manifold() == f"Sigma_{g}xS1"


def test_openbook_exactness_converges_quadratically():
    m = OpenBookModel(1)
    r = [m.exactness_residual(n, step=None, richardson=False) for n in (50, 100, 200)]
    assert 3.5 < r[0] / r[1] < 4.5 and 3.5 < r[1] / r[2] < 4.5


def test_openbook_small_return_time_rejected():
    with pytest.raises(ModelInvalidError):
        OpenBookModel(1, tau0=0.5)


def test_annulus_page():
    m = OpenBookModel(annulus=True)
    assert m.page_morse() == [0, 1] and m.manifold() == "S1xS2"


def test_registry_roundtrip():
    for name in catalog.CATALOG:
        m = build(name)
        doc = json.loads(json.dumps(model_to_json(name, m)))
        m2 = model_from_json(doc)
        assert m2.params() == m.params()
    with pytest.raises(ConfigError):
        build("lens")
    with pytest.raises(ConfigError):
        build("t3", q=2)
    with pytest.raises(ConfigError):
        model_from_json({"model": "t3"})


def test_t3_matches_beta_chart():
    m = T3Model(2)
    c = m.as_lutz_curve()
    z = 0.37
    assert np.allclose(m.alpha([0, 0, z])[:2], [c.h1(z), c.h2(z)], atol=1e-9)
    assert math.isclose(c.orientation_sign, -1)
