import json

import numpy as np
import pytest

from reeblab import blocks
from reeblab.blocks import BlockGraph, GluingEdge, glue, make_block_a, make_block_b
from reeblab.errors import AreaFormObstructionError, EdgeError
from reeblab.lutz import check_contact, delta

SWAP = ((0, 1), (1, 0))


def two_a(matrix=SWAP, critical=False) -> BlockGraph:
    return BlockGraph({"A0": make_block_a(), "A1": make_block_a()},
                      (GluingEdge(("A0", 0), ("A1", 0), matrix, critical),))


def test_gluing_matrix_must_have_det_minus_one():
    with pytest.raises(EdgeError):
        two_a(((1, 0), (0, 1))).validate()
    with pytest.raises(EdgeError):
        GluingEdge(("A0", 0), ("A1", 0), ((0.5, 1), (1, 0))).validate()


def test_unpaired_and_double_boundaries():
    g = BlockGraph({"A0": make_block_a(), "A1": make_block_a()}, ())
    with pytest.raises(EdgeError, match="unpaired"):
        g.validate()
    g = BlockGraph({"A0": make_block_a()}, (GluingEdge(("A0", 0), ("A0", 0), SWAP),))
    with pytest.raises(EdgeError, match="glued twice"):
        g.validate()


@pytest.mark.parametrize("critical,tori", [(False, 0), (True, 1)])
def test_two_a_blocks_census(critical, tori):
    atlas = glue(two_a(critical=critical))
    assert all(row["pass"] for row in blocks.check_atlas(atlas, 2048))
    counts = blocks.census_counts(blocks.critical_census(atlas))
    assert counts == {"EllipticOrbit": 2, "HyperbolicOrbit": 0, "CriticalTorus": tori, "KleinBottle": 0}


def test_collar_profile_is_monotone_without_critical_flag():
    atlas = glue(two_a())
    f = atlas.collars[0].profile.f
    r = np.linspace(-1, 1, 4001)
    d = f(r, 1)
    assert np.all(d > 0) or np.all(d < 0)


@pytest.mark.parametrize("matrix", [((1, 0), (0, -1)), ((-1, 0), (0, 1))])
def test_meridian_to_meridian_collar_crosses_h1_zero(matrix):
    atlas = glue(two_a(matrix))
    c = atlas.collars[0].curve
    r = c.sample_radii(2048)
    h1 = c.h1(r)
    assert h1.min() < 0 < h1.max()
    assert np.all(c.orientation_sign * delta(c, r) > 0)


def test_pants_block_with_three_solid_tori():
    b = make_block_b((1.0, 1.0), (1.0, 1.0), (1.0, 1.0))
    g = BlockGraph({"B": b, "A0": make_block_a(), "A1": make_block_a(), "A2": make_block_a()},
                   tuple(GluingEdge(("B", i), (f"A{i}", 0), SWAP) for i in range(3)))
    atlas = glue(g)
    assert all(row["pass"] for row in blocks.check_atlas(atlas))
    counts = blocks.census_counts(blocks.critical_census(atlas))
    assert counts["EllipticOrbit"] == 3 and counts["HyperbolicOrbit"] == 1


def test_pants_block_area_obstruction():
    with pytest.raises(AreaFormObstructionError):
        make_block_b((-1.0, 1.0), (-1.0, 1.0), (0.5, 1.0))


def test_pants_block_rejects_bad_morse_data():
    with pytest.raises(ValueError):
        make_block_b(1.0, 1.0, 1.0, {"critical_points": [{"index": 0}], "directions": [1, -1, -1]})


def test_graph_and_atlas_json_roundtrip(tmp_path):
    g = two_a(critical=True)
    g2 = BlockGraph.from_json(json.loads(json.dumps(g.to_json())))
    assert g2.edges[0].matrix == SWAP and g2.edges[0].critical_torus
    atlas = glue(g2)
    doc = json.loads(json.dumps(atlas.to_json()))
    back = blocks.AssembledManifold.from_json(doc)
    assert [r["pass"] for r in blocks.check_atlas(back)] == [r["pass"] for r in blocks.check_atlas(atlas)]
    assert blocks.census_counts(blocks.critical_census(back)) == blocks.census_counts(blocks.critical_census(atlas))


def test_block_function_oracle():
    atlas = glue(two_a())
    for bid in ("A0", "A1"):
        fn = atlas.block_function(bid)
        # the core Hessian is diag(2s, 2s) with s the effective Bott sign
        s = atlas.block_sign[bid] * atlas.graph.blocks[bid].bott_sign
        H = blocks.fd_hessian(fn, 0.0, 0.0)
        assert np.allclose(H, 2 * s * np.eye(2), atol=1e-6)


@pytest.mark.parametrize("e", [-2, 0, 3])
def test_bundle_filling(e):
    pb = blocks.bundle_glue_pullback(e, rho=(-0.5, 1.0))
    assert pb.needs_h1_zero == (-0.5 - e <= 0)
    filled = blocks.fill_bundle(pb)
    assert check_contact(filled).passed
    r = pb.germ.curve.sample_radii(9)
    assert np.allclose(np.array(filled.jet(r)), np.array(pb.germ.curve.jet(r)), atol=1e-9)
    h1 = filled.h1(filled.sample_radii(2048))
    # the germ has h1 = 1, so h1 changes sign exactly when the core is (-1, -r^2)
    assert (h1.min() < 0) == pb.needs_h1_zero
