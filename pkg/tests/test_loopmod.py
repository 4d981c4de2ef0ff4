"""Induced graded modules: PBW bases, dimension counts, mode actions.

Dimension oracle: the degree-(delta + w) layer of an induced module has
dim(bottom) * (number of q-colored partitions of w) monomials, where q is
the dimension of the Lie quotient.  Partition numbers come from Euler's
pentagonal recurrence, colored counts from an unbounded-knapsack pass —
both independent of the enumeration code under test.
"""

from __future__ import annotations

import random
from typing import List

import pytest

from vla import catalog
from vla.leibniz import lie_quotient, squares_ideal
from vla.loopmod import (
    DegreeOverflow,
    ModeEngine,
    ModuleSpec,
    adjoint_module,
    annihilation_bound,
    build_basis,
    level_zero_target,
    mode_action,
    module_from_doc,
    trivial_module,
)


def partition_numbers(n_max: int) -> List[int]:
    """p(0..n_max) by the pentagonal number theorem."""
    p = [1] + [0] * n_max
    for n in range(1, n_max + 1):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            g2 = k * (3 * k + 1) // 2
            if g1 > n:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[n - g1]
            if g2 <= n:
                total += sign * p[n - g2]
            k += 1
        p[n] = total
    return p


def colored_partition_numbers(n_max: int, colors: int) -> List[int]:
    """Coefficients of prod_k (1 - q^k)^(-colors) through q^n_max."""
    c = [1] + [0] * n_max
    for k in range(1, n_max + 1):
        for _ in range(colors):
            for n in range(k, n_max + 1):
                c[n] += c[n - k]
    return c


def test_partition_oracle_against_known_values():
    assert partition_numbers(10) == [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]
    assert colored_partition_numbers(6, 1) == partition_numbers(6)
    assert colored_partition_numbers(4, 2) == [1, 2, 5, 10, 20]
    assert colored_partition_numbers(4, 3) == [1, 3, 9, 22, 51]


# -- graded dimensions -------------------------------------------------------


def test_adjoint_dims_match_partition_counts():
    cases = [
        (catalog.n2(), 1, 2),   # quotient line, 2-dim bottom
        (catalog.r2(), 2, 2),
        (catalog.sl2(), 3, 3),
    ]
    for g, qdim, bottom in cases:
        assert lie_quotient(g).qdim == qdim
        basis = build_basis(g, adjoint_module(g), 5)
        counts = colored_partition_numbers(4, qdim)
        expected = [0] + [bottom * counts[w] for w in range(5)]
        assert basis.dims() == expected


def test_n2_adjoint_dims_frozen():
    basis = build_basis(catalog.n2(), adjoint_module(catalog.n2()), 5)
    assert basis.dims() == [0, 2, 2, 4, 6, 10]


def test_trivial_module_dims_are_plain_partitions():
    basis = build_basis(catalog.n2(), trivial_module(catalog.n2()), 6)
    assert basis.dims() == partition_numbers(6)
    assert basis.delta == 0
    assert level_zero_target(catalog.n2(), 6).dims() == basis.dims()


def test_monomial_words_are_canonical_and_indexed():
    basis = build_basis(catalog.n2(), adjoint_module(catalog.n2()), 4)
    seen = set()
    for d in range(1, 5):
        for mon in basis.monomials(d):
            assert mon.degree == d == basis.key_degree(mon.key)
            assert tuple(sorted(mon.word)) == mon.word  # ascending factors
            assert mon.key not in seen
            seen.add(mon.key)
            assert basis.index[mon.key][0] == d
    assert basis.mon_str((((-2, 0), (-1, 0)), 1)) == "x(-2).x(-1).y"


def test_build_basis_needs_room_for_the_bottom():
    with pytest.raises(ValueError, match="at least the bottom degree"):
        build_basis(catalog.n2(), adjoint_module(catalog.n2()), 0)


# -- module specs ------------------------------------------------------------


def test_module_from_doc_named_specs():
    g = catalog.n2()
    adj = module_from_doc(g, "adjoint")
    assert adj.dim == 2 and adj.delta == 1
    triv = module_from_doc(g, "trivial")
    assert triv.dim == 1 and triv.delta == 0
    doc = {
        "dim": adj.dim,
        "actions": adj.actions,
        "delta": adj.delta,
        "names": adj.names,
    }
    again = module_from_doc(g, doc)
    assert again.actions == adj.actions


def test_validate_rejects_acting_squares():
    g = catalog.n2()
    bad = ModuleSpec(
        dim=2,
        actions=[[[0, 0], [1, 0]], [[0, 1], [0, 0]]],  # y must act by zero
        delta=1,
        names=["u0", "u1"],
    )
    with pytest.raises(ValueError, match="squares ideal does not act by zero"):
        bad.validate(g, lie_quotient(g))


def test_validate_rejects_broken_commutators():
    g = catalog.r2()
    bad = ModuleSpec(
        dim=2,
        actions=[[[0, 0], [0, 0]], [[1, 0], [0, 1]]],  # [A_a, A_b] = 0 != A_b
        delta=1,
        names=["u0", "u1"],
    )
    with pytest.raises(ValueError, match=r"fail \[A_a,A_b\] = A_\[a,b\] at pair \(0,1\)"):
        bad.validate(g, lie_quotient(g))


# -- mode actions ------------------------------------------------------------


def x_state(engine):
    return {((), 0): 1}


def test_frozen_small_actions_on_n2():
    eng = ModeEngine(catalog.n2(), adjoint_module(catalog.n2()), 4)
    x = {((), 0): 1}
    assert eng.act(0, 0, x) == {((), 1): 1}          # x.x = y
    assert eng.act(0, 1, x) == {}
    assert eng.act(0, -1, x) == {(((-1, 0),), 0): 1}
    down = eng.act(0, 0, eng.act(0, -1, x))
    assert down == {(((-1, 0),), 1): 1}              # x(-1).y
    assert eng.state_str(down) == "x(-1).y"
    # the square y annihilates everything it meets
    for n in range(-2, 3):
        assert eng.act(1, n, x) == {}
        assert eng.act(1, n, down) == {}


def test_mode_action_wrapper_and_vector_inputs():
    eng = ModeEngine(catalog.n2(), adjoint_module(catalog.n2()), 4)
    x = {((), 0): 1}
    combo = mode_action(eng, {0: 2, 1: 5}, 0, x)  # (2x + 5y) acts like 2x
    assert combo == {((), 1): 2}


def test_action_shifts_degree_by_minus_n():
    eng = ModeEngine(catalog.sl2(), adjoint_module(catalog.sl2()), 4)
    for d in range(1, 4):
        for mon in eng.basis.monomials(d):
            for c in range(3):
                for n in range(-(4 - d), d):
                    out = eng.act(c, n, {mon.key: 1})
                    for key in out:
                        assert eng.key_degree(key) == d - n


def test_straightening_is_a_loop_algebra_rep_on_sl2():
    # [c_m, c'_n] must equal sum over the bracket components at m + n
    g = catalog.sl2()
    eng = ModeEngine(g, adjoint_module(g), 4)
    rng = random.Random(11)
    states = [{mon.key: 1} for d in (1, 2) for mon in eng.basis.monomials(d)]
    for _ in range(60):
        a, b = rng.randrange(3), rng.randrange(3)
        m, n = rng.randint(-1, 2), rng.randint(-1, 2)
        s = rng.choice(states)
        lhs = eng.act(a, m, eng.act(b, n, s))
        for key, c in eng.act(b, n, eng.act(a, m, s)).items():
            v = lhs.get(key, 0) - c
            if v:
                lhs[key] = v
            else:
                lhs.pop(key, None)
        rhs = eng.act(g.table[a][b], m + n, s)
        assert lhs == rhs, (a, b, m, n, s)


def test_squares_annihilate_across_the_window():
    # consequence of factoring through the quotient: every element of the
    # squares ideal acts by zero in every mode
    for g in (catalog.n2(),):
        eng = ModeEngine(g, adjoint_module(g), 4)
        sq = squares_ideal(g)
        for row in sq.rows:
            for d in range(1, 4):
                for mon in eng.basis.monomials(d):
                    for n in range(-(4 - d), d + 2):
                        assert eng.act(dict(row), n, {mon.key: 1}) == {}


def test_annihilation_bound_is_valid_and_exhaustive():
    g = catalog.n2()
    eng = ModeEngine(g, adjoint_module(g), 8)
    for d in range(1, 5):
        for mon in eng.basis.monomials(d):
            v = {mon.key: 1}
            n0 = annihilation_bound(eng, v)
            assert n0 == d - eng.delta + 1
            for c in range(g.dim):
                for n in range(n0, n0 + 4):
                    assert eng.act(c, n, v) == {}


def test_annihilation_bound_is_sharp_on_the_bottom():
    eng = ModeEngine(catalog.n2(), adjoint_module(catalog.n2()), 4)
    x = {((), 0): 1}
    n0 = annihilation_bound(eng, x)
    assert n0 == 1
    assert eng.act(0, n0 - 1, x) != {}


def test_annihilation_bound_edge_cases():
    eng = ModeEngine(catalog.n2(), adjoint_module(catalog.n2()), 4)
    assert annihilation_bound(eng, {}) == 0
    mixed = {((), 0): 1, (((-1, 0),), 0): 1}
    with pytest.raises(ValueError, match="not homogeneous"):
        annihilation_bound(eng, mixed)


def test_overflow_is_reported_not_silently_wrong():
    eng = ModeEngine(catalog.n2(), adjoint_module(catalog.n2()), 3)
    x = {((), 0): 1}
    with pytest.raises(DegreeOverflow) as exc:
        eng.act(0, -3, x)
    assert exc.value.required == 4
    assert exc.value.built == 3
    assert "basis degree 4" in str(exc.value)
