"""Exact sparse linear algebra.

The rank oracle used throughout this file is Bareiss fraction-free
elimination over dense integer matrices — a completely separate algorithm
from the sparse rational rref under test.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vla.exactlin import (
    SubspaceBasis,
    intersect,
    kernel_basis,
    membership,
    qparse,
    qstr,
    rref,
    sum_basis,
    transpose,
    vadd,
    vec,
    vneg,
    vscale,
    vsub,
)


def bareiss_rank(rows: List[List[int]]) -> int:
    """Rank by fraction-free Gaussian elimination (integer pivots only)."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        piv = next((r for r in range(rank, nrows) if m[r][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(nrows):
            if r == rank:
                continue
            for c in range(ncols):
                if c == col:
                    continue
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) // prev
            m[r][col] = 0
        prev = m[rank][col]
        rank += 1
        if rank == nrows:
            break
    return rank


def to_sparse(rows: List[List[int]]):
    return [{j: x for j, x in enumerate(row) if x} for row in rows]


# -- scalar helpers ----------------------------------------------------------


def test_qparse_accepts_ints_strings_and_fractions():
    assert qparse(3) == 3
    assert qparse("3") == 3
    assert qparse("-7/2") == Fraction(-7, 2)
    assert qparse(Fraction(4, 2)) == 2
    assert isinstance(qparse("4/2"), int)  # normalized back to int


def test_qstr_round_trips():
    for x in (0, 5, -3, Fraction(1, 3), Fraction(-9, 4)):
        assert qparse(qstr(x)) == x


def test_vector_arithmetic_drops_zeros():
    a = vec((0, 1), (2, Fraction(1, 2)))
    b = vec((0, -1), (1, 4))
    assert vadd(a, b) == {1: 4, 2: Fraction(1, 2)}
    assert vsub(a, a) == {}
    assert vscale(0, a) == {}
    assert vneg(b) == {0: 1, 1: -4}


# -- rref --------------------------------------------------------------------


def test_rref_two_proportional_rows():
    # span{(2,4), (1,2)} is the line through (1,2)
    basis = rref(to_sparse([[2, 4], [1, 2]]), 2)
    assert basis.rank == 1
    assert basis.rows == [{0: 1, 1: 2}]
    assert basis.pivots == [0]


def test_rref_identity_block_and_pivot_normalization():
    basis = rref(to_sparse([[0, 3, 0], [2, 0, 0]]), 3)
    assert basis.rank == 2
    # deterministic order: ascending pivot column, pivot scaled to 1
    assert basis.pivots == [0, 1]
    assert basis.rows == [{0: 1}, {1: 1}]


def test_rref_rejects_out_of_range_index():
    with pytest.raises(IndexError, match="out of range for ambient dim 2"):
        rref([{2: 1}], 2)


def test_rref_empty_input():
    basis = rref([], 4)
    assert basis.rank == 0 and basis.ambient_dim == 4


@given(
    st.lists(
        st.lists(st.integers(min_value=-9, max_value=9), min_size=4, max_size=4),
        min_size=0,
        max_size=6,
    )
)
@settings(max_examples=200, deadline=None)
def test_rref_rank_matches_bareiss(rows):
    assert rref(to_sparse(rows), 4).rank == bareiss_rank(rows)


@given(
    st.lists(
        st.lists(st.integers(min_value=-5, max_value=5), min_size=3, max_size=3),
        min_size=1,
        max_size=4,
    )
)
@settings(max_examples=150, deadline=None)
def test_rref_is_idempotent(rows):
    once = rref(to_sparse(rows), 3)
    twice = rref(once.rows, 3)
    assert once.rows == twice.rows and once.pivots == twice.pivots


# -- membership --------------------------------------------------------------


def test_membership_returns_coordinates():
    basis = rref(to_sparse([[1, 0, 1], [0, 1, 1]]), 3)
    coords = membership({0: 2, 1: 3, 2: 5}, basis)
    assert coords == [2, 3]


def test_membership_outside_span_is_none():
    basis = rref(to_sparse([[1, 0, 1]]), 3)
    assert membership({0: 1, 1: 1}, basis) is None
    assert basis.contains({0: 3, 2: 3})
    assert not basis.contains({0: 3, 2: 2})


def test_membership_of_zero_vector():
    basis = rref(to_sparse([[1, 2]]), 2)
    assert membership({}, basis) == [0]


# -- subspace operations -----------------------------------------------------


def test_sum_and_intersection_of_coordinate_planes():
    xy = rref(to_sparse([[1, 0, 0], [0, 1, 0]]), 3)
    yz = rref(to_sparse([[0, 1, 0], [0, 0, 1]]), 3)
    total = sum_basis(xy, yz)
    meet = intersect(xy, yz)
    assert total.rank == 3
    assert meet.rank == 1
    assert meet.rows == [{1: 1}]


def test_intersection_vectors_lie_in_both_operands():
    a = rref(to_sparse([[1, 1, 0, 0], [0, 0, 1, 1]]), 4)
    b = rref(to_sparse([[1, 1, 1, 1], [1, 1, -1, -1]]), 4)
    meet = intersect(a, b)
    assert meet.rank == 2
    for row in meet.rows:
        assert a.contains(row)
        assert b.contains(row)


@given(
    st.lists(
        st.lists(st.integers(min_value=-4, max_value=4), min_size=4, max_size=4),
        min_size=1,
        max_size=3,
    ),
    st.lists(
        st.lists(st.integers(min_value=-4, max_value=4), min_size=4, max_size=4),
        min_size=1,
        max_size=3,
    ),
)
@settings(max_examples=100, deadline=None)
def test_rank_inclusion_exclusion(rows_a, rows_b):
    a = rref(to_sparse(rows_a), 4)
    b = rref(to_sparse(rows_b), 4)
    assert sum_basis(a, b).rank + intersect(a, b).rank == a.rank + b.rank


# -- kernels -----------------------------------------------------------------


def test_kernel_of_rank_one_map():
    # rows of the matrix are the equations; kernel of [[1, 1, 1]] is 2-dim
    ker = kernel_basis(to_sparse([[1, 1, 1]]), 3)
    assert ker.rank == 2
    for row in ker.rows:
        assert sum(row.values()) == 0


def test_kernel_of_injective_map_is_zero():
    ker = kernel_basis(to_sparse([[1, 0], [0, 1], [1, 1]]), 2)
    assert ker.rank == 0


@given(
    st.lists(
        st.lists(st.integers(min_value=-6, max_value=6), min_size=4, max_size=4),
        min_size=1,
        max_size=5,
    )
)
@settings(max_examples=150, deadline=None)
def test_rank_nullity(rows):
    rank = rref(to_sparse(rows), 4).rank
    assert kernel_basis(to_sparse(rows), 4).rank == 4 - rank


def test_transpose_round_trip():
    rows = to_sparse([[1, 2, 0], [0, -1, 3]])
    t = transpose(rows, 3)
    assert t == [{0: 1}, {0: 2, 1: -1}, {1: 3}]
    assert transpose(t, 2) == rows
