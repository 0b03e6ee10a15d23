import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reeblab.piecewise import PiecewiseCubic, merge_breaks

coeff = st.floats(-5, 5, allow_nan=False)


@given(st.lists(coeff, min_size=4, max_size=4), st.floats(-2, 2))
@settings(max_examples=50, deadline=None)
def test_polynomial_matches_polyval(c, origin):
    p = PiecewiseCubic.polynomial(c, -1.0, 1.0, origin)
    x = np.linspace(-1, 1, 17)
    ref = np.polynomial.polynomial.polyval(x - origin, c)
    assert np.allclose(p(x), ref, atol=1e-9 * (1 + np.max(np.abs(ref))))
    dref = np.polynomial.polynomial.polyval(x - origin, np.polynomial.polynomial.polyder(c))
    assert np.allclose(p(x, 1), dref, atol=1e-8 * (1 + np.max(np.abs(dref))))


def test_hermite_fit_reproduces_cubic():
    c = [0.3, -1.0, 2.0, 0.5]
    f = lambda x: np.polynomial.polynomial.polyval(x, c)
    df = lambda x: np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(c))
    p = PiecewiseCubic.fit(f, df, np.linspace(0, 2, 5))
    x = np.linspace(0, 2, 101)
    assert np.allclose(p(x), f(x), atol=1e-12)
    assert np.allclose(p(x, 2), np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(c, 2)),
                       atol=1e-10)


def test_hermite_fit_of_sine_converges_at_fourth_order():
    errs = []
    for n in (8, 16, 32):
        p = PiecewiseCubic.fit(np.sin, np.cos, np.linspace(0, np.pi, n + 1))
        x = np.linspace(0, np.pi, 1001)
        errs.append(np.max(np.abs(p(x) - np.sin(x))))
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_concat_restrict_and_reparam():
    a = PiecewiseCubic.polynomial([0, 1], 0.0, 1.0)
    b = PiecewiseCubic.polynomial([1, 1], 1.0, 2.0, origin=1.0)
    ab = PiecewiseCubic.concat([a, b])
    assert ab.interval == (0.0, 2.0) and ab.n_pieces == 2
    assert np.allclose(ab(np.array([0.5, 1.5])), [0.5, 1.5])
    r = ab.restrict(0.25, 1.75)
    assert r.interval == (0.25, 1.75)
    assert np.isclose(r(1.0), 1.0)
    # g(s) = f(scale*s + shift)
    g = ab.affine_reparam(2.0, 0.0)
    assert np.isclose(g(0.5), ab(1.0))


def test_concat_rejects_gap():
    a = PiecewiseCubic.polynomial([0], 0.0, 1.0)
    b = PiecewiseCubic.polynomial([0], 1.5, 2.0)
    with pytest.raises(ValueError):
        PiecewiseCubic.concat([a, b])


def test_combine_and_merge_breaks():
    f = PiecewiseCubic.fit(np.sin, np.cos, np.linspace(0, 1, 3))
    g = PiecewiseCubic.fit(np.cos, lambda x: -np.sin(x), np.linspace(0, 1, 4))
    f2, g2 = merge_breaks(f, g)
    assert np.array_equal(f2.breaks, g2.breaks)
    h = f2.combine(g2, 2.0, -1.0)
    x = np.linspace(0, 1, 33)
    assert np.allclose(h(x), 2 * f(x) - g(x), atol=1e-14)


def test_pieces_roundtrip():
    f = PiecewiseCubic.fit(np.exp, np.exp, np.linspace(-1, 1, 6))
    g = PiecewiseCubic.from_pieces(f.to_pieces())
    x = np.linspace(-1, 1, 50)
    assert np.array_equal(f(x), g(x))
