from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import UsageError
from matrix import (HowellForm, MatrixOverR, brute_force_span, cokernel, coset_representative, determinant,
                    howell_form, is_invertible, parse_matrix, random_invertible, smith_normal_form, span_size)
from modules import free_module
from ring import RingSpec

RINGS = [RingSpec.zmod(2, 2), RingSpec.zmod(2, 3), RingSpec.zmod(3, 2), RingSpec.poly(2, 2), RingSpec.poly(4, 1)]


@st.composite
def matrices(draw, max_rows=3, max_cols=3, square=False):
    ring = draw(st.sampled_from(RINGS))
    n = draw(st.integers(1, max_rows))
    m = n if square else draw(st.integers(1, max_cols))
    entries = draw(st.lists(st.integers(0, ring.size - 1), min_size=n * m, max_size=n * m))
    return MatrixOverR(ring, np.array(entries, dtype=np.int64).reshape(n, m), ncols=m)


def test_parse_matrix(z8):
    M = parse_matrix("2,3;0,2", z8)
    assert M.shape == (2, 2)
    assert M.to_text() == "2,3;0,2"
    assert parse_matrix(M.to_text(), z8) == M


@pytest.mark.parametrize("text", ["1,2;3", "a,b", "", "5,0;0,1"])
def test_parse_matrix_rejects(z4, text):
    with pytest.raises(UsageError):
        parse_matrix(text, z4)


def test_snf_example(z8):
    M = parse_matrix("2,3;0,2", z8)
    snf = smith_normal_form(M)
    assert snf.exponents == (0, 2)
    assert cokernel(M).short == "[2]"
    assert determinant(M) == 4


def test_snf_pivot_order(z4):
    snf = smith_normal_form(parse_matrix("2,0;0,1", z4))
    assert snf.exponents == (0, 1)
    assert snf.diagonal.to_text() == "1,0;0,2"


def test_cokernel_edge_cases(z4, f2t2):
    assert cokernel(MatrixOverR.identity(z4, 3)).lam == ()
    assert cokernel(MatrixOverR.zeros(z4, 2, 2)) == free_module(z4, 2)
    assert cokernel(MatrixOverR.zeros(z4, 2, 0)) == free_module(z4, 2)
    assert cokernel(parse_matrix("2", f2t2)).lam == (1,)
    # n x (n-1) always leaves a free summand
    assert cokernel(parse_matrix("1;1", z4)).free_rank == 1


def test_determinants(z4, f2t2):
    assert determinant(parse_matrix("2,0;0,2", z4)) == 0
    assert determinant(parse_matrix("0,1;1,0", z4)) == 3
    assert determinant(parse_matrix("2,1;1,2", f2t2)) == 1
    assert determinant(MatrixOverR.zeros(z4, 0, 0)) == 1
    with pytest.raises(UsageError):
        determinant(parse_matrix("1,2", z4))


def test_random_invertible(z9, rng):
    for _ in range(5):
        M = random_invertible(z9, 3, rng)
        assert is_invertible(M)
        assert cokernel(M).lam == ()


def test_howell_form_example(z4):
    form = HowellForm.of(parse_matrix("2;2", z4))
    assert form.key == "2,2"
    assert form.size == 2
    assert form.quotient_size == 8
    assert howell_form(parse_matrix("2;2", z4)).shape == (2, 1)
    assert HowellForm.of(MatrixOverR.zeros(z4, 2, 1)).key == "0"


def test_howell_saturation(z4):
    # (0, 2) = 2 * (2, 1) has a zero first entry and only enters the form through saturation
    form = HowellForm.of(parse_matrix("2;1", z4))
    assert form.size == 4
    assert form.contains((0, 2))
    assert not form.contains((2, 0))
    assert form.reduce((2, 0)) == (0, 1)


@given(matrices())
@settings(max_examples=80, deadline=None)
def test_snf_equivalence(M):
    snf = smith_normal_form(M, transforms=True)
    assert snf.U @ M @ snf.V == snf.diagonal
    assert list(snf.exponents) == sorted(snf.exponents)
    ring = M.ring
    for i, a in enumerate(snf.exponents):
        assert snf.diagonal.data[i, i] == ring.pi_power(a)
    off = snf.diagonal.data.copy()
    for i in range(min(M.shape)):
        off[i, i] = 0
    assert not off.any()


@given(matrices(max_cols=3))
@settings(max_examples=60, deadline=None)
def test_cokernel_and_span_sizes(M):
    span = brute_force_span(M)
    ring = M.ring
    assert cokernel(M).size * len(span) == ring.size ** M.nrows
    assert span_size(M) == len(span)
    form = HowellForm.of(M)
    assert all(form.contains(v) for v in span)


@given(matrices(max_rows=2, max_cols=3))
@settings(max_examples=40, deadline=None)
def test_coset_labels_are_canonical(M):
    ring = M.ring
    form = HowellForm.of(M)
    span = brute_force_span(M)
    labels = {}
    for x in product(range(ring.size), repeat=M.nrows):
        labels.setdefault(coset_representative(form, x), []).append(x)
    assert len(labels) == form.quotient_size
    for members in labels.values():
        base = members[0]
        for y in members:
            diff = tuple(ring.sub(a, b) for a, b in zip(y, base))
            assert diff in span


@given(matrices(), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_span_key_is_invariant(M, seed):
    V = random_invertible(M.ring, M.ncols, np.random.default_rng(seed))
    assert HowellForm.of(M @ V).key == HowellForm.of(M).key


@given(matrices(square=True), st.data())
@settings(max_examples=60, deadline=None)
def test_determinant_is_multiplicative(A, data):
    ring, n = A.ring, A.nrows
    entries = data.draw(st.lists(st.integers(0, ring.size - 1), min_size=n * n, max_size=n * n))
    B = MatrixOverR(ring, np.array(entries, dtype=np.int64).reshape(n, n), ncols=n)
    assert determinant(A @ B) == ring.mul(determinant(A), determinant(B))
    # det = unit * pi^(sum of the exponents), truncated at pi^e
    assert min(sum(cokernel(A).lam), ring.e) == ring.valuation(determinant(A))
