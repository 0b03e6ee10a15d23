import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from reeblab import invariants as inv
from reeblab.errors import GcdError, InconsistentRecordError, ParityError, PreconditionError


def det_fraction(A) -> Fraction:
    """Oracle: Gaussian elimination over the rationals."""
    M = [[Fraction(x) for x in row] for row in A]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            k = M[r][c] / M[c][c]
            M[r] = [a - k * b for a, b in zip(M[r], M[c])]
    return det


int_matrix = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-50, 50), min_size=n, max_size=n), min_size=n, max_size=n))


@given(int_matrix)
@settings(max_examples=100)
def test_bareiss_determinant_matches_fraction_oracle(A):
    assert inv.det_exact(A) == det_fraction(A)


primitive = st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=5).filter(
    lambda v: math.gcd(*v) == 1)


@given(primitive)
@settings(max_examples=200)
def test_primitive_reduce_property(v):
    w = inv.primitive_reduce(v)
    assert w.verify()
    assert det_fraction(w.matrix) == 1
    assert inv.matvec(w.matrix, v) == [0] * (len(v) - 1) + [1]


def test_bezout_example():
    w = inv.primitive_reduce([3, 5])
    assert [list(r) for r in w.matrix] == [[5, -3], [2, -1]]


def test_non_primitive_and_short_vectors():
    with pytest.raises(GcdError) as exc:
        inv.primitive_reduce([4, 6])
    assert exc.value.gcd == 2
    with pytest.raises(PreconditionError):
        inv.primitive_reduce([1])


@given(st.integers(-100, 100), st.integers(-100, 100), st.integers(-100, 100))
def test_lift_to_sl3(a, b, c):
    assume(a or b)
    out = inv.lift_to_sl3(a, b, c)
    assert out["raw_det"] == -1 and out["det"] == 1
    assert out["image"] == [a, b, c]


hp = st.integers(-1000, 1000)


@given(hp, hp)
def test_connected_sum_rules_agree(a, b):
    ra = inv.convert(inv.InvariantRecord(H_prime=a))
    rb = inv.convert(inv.InvariantRecord(H_prime=b))
    s = inv.connected_sum(ra, rb)
    # d3 shifts by a half under connected sum, computed independently in Q
    assert Fraction(s.d3_twice, 2) == ra.d3 + rb.d3 + Fraction(1, 2)
    assert s.H_prime == a + b and s.H == s.H_prime + 1


def test_convert_fills_and_checks():
    r = inv.convert(inv.InvariantRecord(H=4))
    assert (r.H_prime, r.d3) == (3, Fraction(-7, 2))
    r = inv.convert(inv.InvariantRecord.from_json({"d3": "-1/2"}))
    assert (r.H, r.H_prime) == (1, 0)
    with pytest.raises(InconsistentRecordError):
        inv.convert(inv.InvariantRecord(H=4, d3_twice=1))
    with pytest.raises(InconsistentRecordError):
        inv.InvariantRecord.from_json({"d3": "1/3"})
    with pytest.raises(InconsistentRecordError):
        inv.convert(inv.InvariantRecord())


def test_record_json_roundtrip():
    r = inv.xi_k(3)
    back = inv.InvariantRecord.from_json(r.to_json())
    assert (back.H, back.H_prime, back.d3_twice) == (r.H, r.H_prime, r.d3_twice)


@pytest.mark.parametrize("k", range(5))
def test_xi_k_table(k):
    r = inv.xi_k(k)
    assert r.H_prime == k * (k - 2)
    assert r.H == (k - 1) ** 2
    assert r.d3 == -r.H_prime - Fraction(1, 2)


def _brute_min_size(n: int, kmax: int = 8, size: int = 4) -> int | None:
    vals = [k * (k - 2) for k in range(kmax + 1) if k * (k - 2) != 0]
    for s in range(1, size + 1):
        if any(sum(c) == n for c in itertools.combinations_with_replacement(vals, s)):
            return s
    return None


@pytest.mark.parametrize("n", range(-10, 11))
def test_realize_hprime_is_minimal(n):
    out = inv.realize_hprime(n)
    assert out.total == n
    assert all(k not in (0, 2) for k in out.ks)
    brute = _brute_min_size(n)
    if brute is not None:
        assert len(out.ks) == brute
    assert out.full_twist_alternative == (n == 0)


@pytest.mark.parametrize("n", range(-3, 4))
def test_degree_of_power_maps(n):
    assert inv.degree(inv.power_map(n)) == n


def test_degree_of_antipodal_and_identity():
    assert inv.degree(lambda p: -np.atleast_2d(p)) == -1
    assert inv.degree(lambda p: np.atleast_2d(p)) == 1


def test_hopf_s1():
    assert [inv.hopf_s1(n) for n in range(-2, 3)] == [4, 1, 0, 1, 4]


def test_euler_from_morse():
    for g in (1, 2, 3):
        page = [0] + [1] * (2 * g + 1)
        assert inv.euler_from_morse(page).vector == (-2 * g,)
    with pytest.raises(PreconditionError):
        inv.euler_from_morse(["spiral"])


def test_twist_update():
    e = inv.EulerClass((0, 0), ("a", "b"))
    assert inv.twist_update(e, (1, 2), "simple").vector == (-2, -4)
    assert inv.twist_update(e, (1, 2), "full").vector == (0, 0)


even = st.lists(st.integers(-500, 500).map(lambda x: 2 * x), min_size=2, max_size=4)


@given(even)
@settings(max_examples=100)
def test_realize_even_euler_property(t):
    plan = inv.realize_even_euler(t)
    assert plan.verify()
    if any(t):
        assert 2 * plan.k == math.gcd(*t)
    else:
        assert plan.full_twist_marker


def test_realize_even_euler_rejects_odd():
    with pytest.raises(ParityError, match="must be even"):
        inv.realize_even_euler([3, 6])
