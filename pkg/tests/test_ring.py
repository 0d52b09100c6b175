import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import DomainError, UsageError
from ring import Ideal, RingSpec, format_ring, least_irreducible, parse_ring

RINGS = [
    RingSpec.zmod(2, 1), RingSpec.zmod(2, 3), RingSpec.zmod(3, 2), RingSpec.zmod(5, 1),
    RingSpec.poly(2, 2), RingSpec.poly(4, 1), RingSpec.poly(4, 2), RingSpec.poly(3, 2),
]


@st.composite
def ring_and_elements(draw, count=3):
    ring = draw(st.sampled_from(RINGS))
    return ring, [draw(st.integers(0, ring.size - 1)) for _ in range(count)]


@pytest.mark.parametrize("text,expected", [
    ("Z/4", RingSpec.zmod(2, 2)),
    ("Z/9", RingSpec.zmod(3, 2)),
    ("Z/2^3", RingSpec.zmod(2, 3)),
    ("F2[t]/t^2", RingSpec.poly(2, 2)),
    ("F_4[t]/(t^2)", RingSpec.poly(4, 2)),
    ("F4[t]/t", RingSpec.poly(4, 1)),
])
def test_parse_ring(text, expected):
    assert parse_ring(text) == expected
    assert parse_ring(format_ring(expected)) == expected


@pytest.mark.parametrize("text", ["Z/6", "Z/1", "F6[t]/t^2", "Q", ""])
def test_parse_ring_rejects(text):
    with pytest.raises(UsageError):
        parse_ring(text)


def test_sizes(z4, f4, f2t2):
    assert (z4.q, z4.size) == (2, 4)
    assert (f4.q, f4.size) == (4, 4)
    assert (f2t2.q, f2t2.size) == (2, 4)
    assert RingSpec.poly(4, 2).size == 16


def test_least_irreducible():
    assert least_irreducible(2, 2) == (1, 1, 1)
    assert least_irreducible(2, 3) == (1, 1, 0, 1)
    assert least_irreducible(3, 1) == (0, 1)


def test_f4_arithmetic(f4):
    # omega = code 2 satisfies omega^2 = omega + 1
    assert f4.mul(2, 2) == 3
    assert f4.add(2, 1) == 3
    assert f4.inverse(2) == 3
    assert all(f4.is_unit(a) for a in (1, 2, 3))


def test_truncated_polynomials(f2t2):
    t = f2t2.pi_power(1)
    assert t == 2
    assert f2t2.mul(t, t) == 0
    assert f2t2.valuation(t) == 1
    assert f2t2.valuation(0) == 2
    assert f2t2.inverse(3) == 3
    assert f2t2.add(3, 1) == 2


def test_zmod_valuation_and_inverse(z9):
    assert z9.valuation(3) == 1
    assert z9.valuation(6) == 1
    assert z9.valuation(0) == 2
    assert z9.inverse(2) == 5
    with pytest.raises(DomainError):
        z9.inverse(3)


def test_unit_part(z8):
    assert z8.unit_part(6) == (3, 1)
    with pytest.raises(DomainError):
        z8.unit_part(0)


def test_ideals(z8):
    ideals = z8.enumerate_ideals()
    assert [I.size for I in ideals] == [8, 4, 2, 1]
    assert Ideal(z8, 1).elements() == frozenset({0, 2, 4, 6})
    assert Ideal(z8, 2).quotient_units() == 2
    assert Ideal(z8, 0).quotient_units() == 1
    assert 4 in Ideal(z8, 2) and 2 not in Ideal(z8, 2)
    assert [str(I) for I in ideals] == ["(1)", "(pi)", "(pi^2)", "(0)"]


def test_subrngs(z4, f4):
    assert z4.enumerate_subrngs() == [frozenset({0}), frozenset({0, 2}), frozenset({0, 1, 2, 3})]
    subs = f4.enumerate_subrngs()
    assert frozenset({0, 1}) in subs
    assert len(subs) == 3


def test_additive_generators(z9, f4, f2t2):
    assert z9.additive_generators() == [1]
    assert f4.additive_generators() == [1, 2]
    assert f2t2.additive_generators() == [1, 2]


def test_ring_elements(z4, z8):
    a = z4.element(3)
    assert int(a + 3) == 2
    assert int(a * a) == 1
    assert int(-a) == 1
    assert a.inverse().code == 3
    with pytest.raises(UsageError):
        a + z8.element(1)



@pytest.mark.parametrize("other", ["1", 1.5, None, [1]])
def test_ring_elements_reject_foreign_operands(z4, other):
    a = z4.element(3)
    with pytest.raises(TypeError):
        a + other
    with pytest.raises(TypeError):
        other * a
    with pytest.raises(TypeError):
        a - other
    assert a.__add__(other) is NotImplemented


@given(ring_and_elements())
@settings(max_examples=200, deadline=None)
def test_ring_axioms(data):
    ring, (a, b, c) = data
    assert ring.add(a, b) == ring.add(b, a)
    assert ring.mul(a, b) == ring.mul(b, a)
    assert ring.mul(a, ring.add(b, c)) == ring.add(ring.mul(a, b), ring.mul(a, c))
    assert ring.mul(ring.mul(a, b), c) == ring.mul(a, ring.mul(b, c))
    assert ring.add(a, ring.neg(a)) == 0


@given(ring_and_elements(count=1))
@settings(max_examples=200, deadline=None)
def test_inverse_and_valuation(data):
    ring, (a,) = data
    if ring.is_unit(a):
        assert ring.mul(a, ring.inverse(a)) == 1
        assert ring.valuation(a) == 0
    elif a:
        unit, v = ring.unit_part(a)
        assert ring.mul(unit, ring.pi_power(v)) == a
        assert ring.mod_pi_power(a, v) == 0
