from math import prod

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ResourceLimitError, UsageError
from modules import (ConcreteModule, ModuleType, SubmoduleLattice, aut_count, aut_count_bruteforce,
                     d_invariant, enumerate_module_types, free_module, hom_count, hom_count_bruteforce,
                     parse_module_type, residue_module, sur_count, sur_count_bruteforce)
from ring import RingSpec

SMALL_RINGS = [RingSpec.zmod(2, 2), RingSpec.zmod(2, 3), RingSpec.zmod(3, 2), RingSpec.poly(2, 2), RingSpec.poly(4, 1)]
LARGER_RINGS = [RingSpec.zmod(2, 3), RingSpec.zmod(2, 2), RingSpec.zmod(3, 2), RingSpec.poly(4, 2), RingSpec.poly(2, 3),
                RingSpec.poly(8, 1), RingSpec.zmod(7, 1)]


def candidate_images(A, B):
    """Tuples of generator images the brute-force counters walk through"""
    q = B.ring.q
    return prod(q ** sum(min(a, b) for b in B.lam) for a in A.lam)


def test_module_type_normalizes(z4):
    A = ModuleType(z4, (1, 0, 2))
    assert A.lam == (2, 1)
    assert A.size == 8
    assert A.rank == 2
    assert A.free_rank == 1
    assert A.conjugate() == (2, 1)
    assert A.short == "[2,1]"
    assert str(A) == "R/pi^2 + R/pi"
    assert str(ModuleType(z4)) == "0"
    with pytest.raises(UsageError):
        ModuleType(z4, (3,))


@pytest.mark.parametrize("text,lam", [("[2,1]", (2, 1)), ("[]", ()), ("0", ()),
                                      ("R/pi^2 + R/pi", (2, 1)), ("R + R/pi", (2, 1))])
def test_parse_module_type(z4, text, lam):
    A = parse_module_type(text, z4)
    assert A.lam == lam
    assert parse_module_type(str(A), z4) == A
    assert parse_module_type(A.short, z4) == A


def test_parse_module_type_rejects(z4):
    with pytest.raises(UsageError):
        parse_module_type("[a]", z4)
    with pytest.raises(UsageError):
        parse_module_type("R/x", z4)


@pytest.mark.parametrize("lam,expected", [((2,), 2), ((1, 1), 6), ((2, 1), 8), ((1,), 1), ((), 1)])
def test_aut_count_over_z4(z4, lam, expected):
    assert aut_count(ModuleType(z4, lam)) == expected


def test_aut_count_gl(f4):
    # |GL_2(F_4)| = (16 - 1)(16 - 4)
    assert aut_count(residue_module(f4, 2)) == 180


@pytest.mark.parametrize("ring", SMALL_RINGS, ids=str)
def test_aut_count_matches_bruteforce(ring):
    for A in enumerate_module_types(ring, 16):
        if A.size <= 9 or A.rank <= 2:
            assert aut_count(A) == aut_count_bruteforce(A), A


def test_hom_and_sur_counts(z4):
    free2 = free_module(z4, 2)
    R = free_module(z4, 1)
    k = residue_module(z4)
    assert hom_count(R, k) == 2
    assert sur_count(free2, R) == 12
    assert sur_count(k, R) == 0
    assert sur_count(R, ModuleType(z4)) == 1
    A = ModuleType(z4, (2, 1))
    assert hom_count(A, A) == 32 == hom_count_bruteforce(A, A)


@pytest.mark.parametrize("ring", LARGER_RINGS, ids=str)
def test_aut_count_matches_bruteforce_up_to_64(ring):
    checked = 0
    for A in enumerate_module_types(ring, 64):
        if A.size > 16 and candidate_images(A, A) <= 16384:
            assert aut_count(A) == aut_count_bruteforce(A), A
            checked += 1
    assert checked >= 1


@pytest.mark.parametrize("ring", SMALL_RINGS[:3], ids=str)
def test_sur_count_matches_bruteforce(ring):
    types = enumerate_module_types(ring, 16)
    for A in types:
        for B in types:
            if candidate_images(A, B) <= 4096:
                assert sur_count(A, B) == sur_count_bruteforce(A, B), (A, B)


@pytest.mark.slow
@pytest.mark.parametrize("ring", SMALL_RINGS, ids=str)
def test_sur_count_matches_bruteforce_all_pairs(ring):
    types = enumerate_module_types(ring, 16)
    for A in types:
        for B in types:
            assert sur_count(A, B) == sur_count_bruteforce(A, B), (A, B)


def test_d_invariant(z4):
    assert d_invariant(ModuleType(z4, (2, 2, 1))) == 2
    assert d_invariant(residue_module(z4, 3)) == 0


def test_enumerate_module_types(z4, z2):
    types = enumerate_module_types(z4, 16)
    assert len(types) == 9
    assert types[0].lam == ()
    assert all(A.size <= 16 for A in types)
    assert [A.lam for A in enumerate_module_types(z2, 8)] == [(), (1,), (1, 1), (1, 1, 1)]


def test_concrete_module_layout(z4):
    M = ConcreteModule(ModuleType(z4, (2, 1)))
    assert M.size == 8
    assert M.index_of([2, 0]) == 2
    assert M.index_of([0, 1]) == 4
    assert M.add(M.index_of([3, 1]), M.index_of([1, 1])) == 0
    assert M.order(M.index_of([1, 0])) == 4
    assert M.act(2, M.index_of([1, 1])) == M.index_of([2, 0])
    assert M.generators() == [1, 4]
    assert M.annihilated_by(1) == frozenset({0, 2, 4, 6})
    assert M.pi_power_image(1) == frozenset({0, 2})


def test_module_cap(z4):
    with pytest.raises(ResourceLimitError):
        ConcreteModule(free_module(z4, 5), cap=256)


def test_subgroup_counts(z4, f4):
    M = ConcreteModule(ModuleType(z4, (2, 1)))
    subgroups = M.enumerate_subgroups()
    assert len(subgroups) == 8
    assert all(s.is_R_module for s in subgroups)
    K = ConcreteModule(residue_module(f4))
    subgroups = K.enumerate_subgroups()
    assert len(subgroups) == 5
    assert sum(s.is_R_module for s in subgroups) == 2
    assert len(K.enumerate_submodules()) == 2


def test_enumeration_budget(z4):
    M = ConcreteModule(ModuleType(z4, (2, 1)))
    with pytest.raises(ResourceLimitError):
        M.enumerate_subgroups(budget=3)


def test_types_of_submodules_and_quotients(z4):
    M = ConcreteModule(ModuleType(z4, (2, 1)))
    N = M.submodule_closure([M.index_of([2, 0])])
    assert N == frozenset({0, 2})
    assert M.module_type_of(N).lam == (1,)
    assert M.quotient_type(N).lam == (1, 1)
    N2 = M.submodule_closure([M.index_of([0, 1])])
    assert M.quotient_type(N2).lam == (2,)


def test_generates(z4):
    M = ConcreteModule(ModuleType(z4, (2, 1)))
    assert M.generates([M.index_of([1, 0]), M.index_of([0, 1])])
    assert M.generates([M.index_of([3, 0]), M.index_of([2, 1])])
    assert not M.generates([M.index_of([2, 0]), M.index_of([0, 1])])
    assert not M.generates([])


def test_lattice_mobius_on_a_chain(z4):
    lattice = SubmoduleLattice(ConcreteModule(free_module(z4, 1)))
    assert len(lattice) == 3
    assert lattice.mobius(lattice.bottom, lattice.top) == 0
    assert lattice.mobius(1, lattice.top) == -1
    assert lattice.describe(lattice.top) == [(1,)]


def test_lattice_mobius_on_a_plane(z2):
    lattice = SubmoduleLattice(ConcreteModule(residue_module(z2, 2)))
    assert len(lattice) == 5
    # mu(0, V) = q^(n(n-1)/2) (-1)^n for V = F_q^n
    assert lattice.mobius(lattice.bottom, lattice.top) == 2
    assert lattice.join(1, 2) == lattice.top


@given(st.sampled_from(SMALL_RINGS), st.data())
@settings(max_examples=40, deadline=None)
def test_mobius_recurrence(ring, data):
    types = [A for A in enumerate_module_types(ring, 16) if A.lam]
    A = data.draw(st.sampled_from(types))
    lattice = SubmoduleLattice(ConcreteModule(A))
    i = data.draw(st.integers(0, len(lattice) - 1))
    for j in lattice.up_sets[i]:
        if j != i:
            assert sum(lattice.mobius(i, k) for k in lattice.up_sets[i] if lattice.leq(k, j)) == 0
