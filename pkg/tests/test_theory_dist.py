import pytest

from errors import UsageError
from modules import ModuleType, enumerate_module_types, free_module, residue_module
from ring import RingSpec
from theory_dist import (LimitLaw, c_constant, finite_field_corank_prob, friedman_washington_prob, haar_limit_prob,
                         limit_table, rectangular_prob, sawin_wood_prob)

C0_2 = 0.2887880950866024


def test_c_constant():
    c = c_constant(2, 0)
    assert c.value == pytest.approx(C0_2, abs=1e-12)
    assert 0 <= c.tail_bound < 1e-15
    values = [c_constant(3, u).value for u in range(6)]
    assert values == sorted(values)
    assert c_constant(2, 40).value == pytest.approx(1.0, abs=1e-11)


@pytest.mark.parametrize("q,u", [(1, 0), (2, -1)])
def test_c_constant_rejects(q, u):
    with pytest.raises(UsageError):
        c_constant(q, u)


def test_sawin_wood_examples(z2, z4):
    trivial = sawin_wood_prob(ModuleType(z2), 1)
    assert trivial.value == pytest.approx(0.5775761901732048, abs=1e-12)
    R = free_module(z4, 1)
    expected = c_constant(2, 2).value / 8
    assert sawin_wood_prob(R, 1).value == pytest.approx(expected, abs=1e-14)
    with pytest.raises(UsageError):
        sawin_wood_prob(R, 0)


@pytest.mark.parametrize("ring", [RingSpec.zmod(2, 6), RingSpec.zmod(3, 4)], ids=str)
@pytest.mark.parametrize("u", [1, 2])
def test_sawin_wood_matches_rectangular_without_free_part(ring, u):
    for A in enumerate_module_types(ring, 32):
        assert A.free_rank == 0
        a, b = sawin_wood_prob(A, u), rectangular_prob(A, u)
        assert abs(a.value - b.value) <= max(a.tail_bound + b.tail_bound, 1e-16) + 1e-15
        assert abs(a.value - b.value) <= 1e-10


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("u", [1, 2])
def test_sawin_wood_over_a_field_is_the_corank_law(q, u):
    field = RingSpec.poly(q, 1) if q == 2 else RingSpec.zmod(q, 1)
    for d in range(4):
        a = sawin_wood_prob(residue_module(field, d), u)
        b = finite_field_corank_prob(d, q, u)
        assert a.value == pytest.approx(b.value, rel=1e-12)


def test_friedman_washington(z4):
    assert friedman_washington_prob(ModuleType(z4)).value == pytest.approx(C0_2, abs=1e-12)
    assert friedman_washington_prob(residue_module(z4, 2)).value == pytest.approx(C0_2 / 6, abs=1e-12)


def test_haar_limit_at_u0(z2, z4):
    assert haar_limit_prob(ModuleType(z4), 0).value == pytest.approx(C0_2, abs=1e-12)
    # every Z_2-module of the form Z/2^k (k >= 2) reduces to R
    assert haar_limit_prob(free_module(z4, 1), 0).value == pytest.approx(C0_2, abs=1e-12)
    assert haar_limit_prob(residue_module(z2), 0).value == pytest.approx(2 * C0_2, abs=1e-12)
    with pytest.raises(UsageError):
        haar_limit_prob(ModuleType(z4), -1)


@pytest.mark.parametrize("q", [2, 3])
def test_haar_limit_over_a_field_is_the_corank_law(q):
    field = RingSpec.zmod(q, 1)
    for d in range(4):
        a = haar_limit_prob(residue_module(field, d), 0)
        b = finite_field_corank_prob(d, q, 0)
        assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound + 1e-12


@pytest.mark.parametrize("u,tol", [(0, 1e-4), (1, 1e-3)])
def test_limit_law_mass(z4, u, tol):
    table = limit_table(z4, u, 256)
    assert table["probability"].sum() == pytest.approx(1.0, abs=tol)
    assert (table["probability"] >= 0).all()


def test_limit_table(z2):
    table = limit_table(z2, 0, 16)
    assert list(table.columns) == ["module_type", "lambda", "size", "probability", "tail_bound"]
    assert list(table["module_type"])[:2] == ["0", "R/pi"]
    assert table.iloc[0]["probability"] == pytest.approx(C0_2, abs=1e-9)
    assert list(table["size"]) == sorted(table["size"])
    for _, group in table.groupby("size"):
        probs = list(group["probability"])
        assert probs == sorted(probs, reverse=True)


def test_limit_table_orders_within_size(z4):
    table = limit_table(z4, 0, 16)
    size4 = table[table["size"] == 4]
    assert set(size4["lambda"]) == {"[2]", "[1,1]"}
    assert size4["probability"].is_monotonic_decreasing


def test_limit_law(z4, z2):
    law = LimitLaw(z4, 1)
    assert law.probability(ModuleType(z4)).value == pytest.approx(c_constant(2, 1).value, abs=1e-12)
    assert law.tail_bound < 1e-15
    with pytest.raises(UsageError):
        law.probability(ModuleType(z2))
    assert len(law.table(4)) == 4
