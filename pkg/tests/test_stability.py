import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagstab.stability import enumerate_decompositions, is_stable
from lagstab.torus import GradedClass, graded_class, shift_grading


def _by_pair(ws):
    return {(w.first[:2], w.second[:2]): w for w in ws}


def brute_force_splittings(p, q, bound):
    """Independent oracle: every bounded ordered splitting with nonzero determinant."""
    out = set()
    rng = range(-bound, bound + 1)
    for p1 in rng:
        for q1 in rng:
            for p2 in rng:
                for q2 in rng:
                    if (p1 + p2, q1 + q2) != (p, q):
                        continue
                    if (p1, q1) == (0, 0) or (p2, q2) == (0, 0):
                        continue
                    if p1 * q2 - p2 * q1 != 0:
                        out.add(((p1, q1), (p2, q2)))
    return out


def test_one_zero_plus_diagonal_witness():
    ws = _by_pair(enumerate_decompositions(graded_class(2, 1), 3))
    w = ws[((1, 0), (1, 1))]
    assert w.first[2] == pytest.approx(0.0)
    assert w.second[2] == pytest.approx(math.pi / 4)
    assert w.compatible and not w.destabilizing
    assert w.intersection_count == 1


def test_vertical_witness():
    ws = _by_pair(enumerate_decompositions(graded_class(0, 1), 2))
    w = ws[((1, 1), (-1, 0))]
    assert w.first[2] == pytest.approx(math.pi / 4)
    assert w.second[2] == pytest.approx(math.pi)
    assert w.compatible and not w.destabilizing


@pytest.mark.parametrize("cls", [(2, 1), (1, 1), (0, 1), (-3, 2)])
def test_primitive_examples_stable(cls):
    for bound in (max(map(abs, cls)), 5):
        assert is_stable(graded_class(*cls), bound).status == "stable"


@pytest.mark.parametrize("cls", [(2, 0), (3, 0), (2, 2), (0, -4)])
def test_imprimitive_classes_parallel_only(cls):
    v = is_stable(graded_class(*cls), 5)
    assert v.status == "parallel_only"
    # transverse splittings do exist (e.g. (1,1)+(1,-1) for (2,0)), but every
    # resolved sum breaks into gcd(p, q) parallel components
    assert v.witnesses
    assert all(w.components == math.gcd(*cls) > 1 for w in v.witnesses)


def test_two_zero_has_transverse_splittings():
    # imprimitive classes do split transversally: (1,1)+(1,-1) has determinant -2
    found = brute_force_splittings(2, 0, 2)
    assert ((1, 1), (1, -1)) in found
    assert {k for k in _by_pair(enumerate_decompositions(graded_class(2, 0), 2))} == found


@pytest.mark.parametrize("cls,bound", [((2, 1), 3), ((0, 1), 2), ((3, 0), 4), ((-1, 2), 3)])
def test_enumeration_matches_brute_force(cls, bound):
    ws = enumerate_decompositions(graded_class(*cls), bound)
    assert set(_by_pair(ws)) == brute_force_splittings(*cls, bound)
    assert len(ws) == len(set(_by_pair(ws)))


def test_lexicographic_order():
    ws = enumerate_decompositions(graded_class(2, 1), 4)
    keys = [w.first[:2] for w in ws]
    assert keys == sorted(keys)


def test_bound_and_zero_class_errors():
    with pytest.raises(ValueError):
        enumerate_decompositions(graded_class(3, 1), 2)
    with pytest.raises(ValueError):
        is_stable(graded_class(0, 5), 4)
    with pytest.raises(ValueError):
        graded_class(0, 0)


def test_verdict_json():
    d = is_stable(graded_class(2, 1), 2).to_json()
    assert d["status"] == "stable" and d["search_bound"] == 2
    assert {"first", "second", "intersection_count", "compatible", "destabilizing"} <= set(d["witnesses"][0])


small = st.tuples(st.integers(-4, 4), st.integers(-4, 4)).filter(lambda v: v != (0, 0))


@given(small, st.integers(0, 2))
def test_witness_lifts_and_flags(cls, extra):
    bound = max(map(abs, cls)) + extra
    for w in enumerate_decompositions(graded_class(*cls), bound):
        (p1, q1, phi1), (p2, q2, phi2) = w.first, w.second
        # lifts are lifts of the true arguments
        assert cmath.exp(1j * phi1) == pytest.approx(complex(p1, q1) / abs(complex(p1, q1)), abs=1e-12)
        assert cmath.exp(1j * phi2) == pytest.approx(complex(p2, q2) / abs(complex(p2, q2)), abs=1e-12)
        assert -math.pi < phi2 - phi1 <= math.pi
        assert w.compatible == (0 < phi2 - phi1 < math.pi)
        assert w.intersection_count == abs(p1 * q2 - p2 * q1)
        if w.compatible:
            assert phi2 > phi1 and not w.destabilizing


@given(small)
def test_swap_selects_exactly_one_order(cls):
    ws = _by_pair(enumerate_decompositions(graded_class(*cls), max(map(abs, cls)) + 1))
    for (a, b), w in ws.items():
        other = ws[(b, a)]
        assert w.compatible != other.compatible


@given(small, st.integers(-3, 3))
def test_even_shift_invariance(cls, m):
    c = graded_class(*cls)
    d = shift_grading(c, 2 * m)
    bound = max(map(abs, cls)) + 1
    v0, v1 = is_stable(c, bound), is_stable(d, bound)
    assert v0.status == v1.status
    for w0, w1 in zip(v0.witnesses, v1.witnesses):
        assert w0.first[:2] == w1.first[:2] and w0.compatible == w1.compatible
        assert w1.first[2] - w0.first[2] == pytest.approx(2 * math.pi * m, abs=1e-9)


@given(small)
def test_never_destabilized(cls):
    v = is_stable(graded_class(*cls), 5)
    assert v.status != "destabilized"
    assert v.status == ("stable" if math.gcd(*cls) == 1 else "parallel_only")


def test_odd_shift_class_is_still_stable():
    c = shift_grading(graded_class(2, 1), 1)
    assert isinstance(c, GradedClass) and (c.p, c.q) == (-2, -1)
    assert is_stable(c, 3).status == "stable"
