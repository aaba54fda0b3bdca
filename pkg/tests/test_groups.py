from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from tracelab.groups import (BudgetExceeded, IntegerMatrix, IntegerMatrixGroup, NotInGroup,
                             build_group, center, check_group_axioms, conjugacy_classes,
                             expected_order, parse_descriptor, reduce, sl_order, word_ball)


@pytest.mark.parametrize("desc,order", [
    ("sl(2,3)", 24), ("sl(2,4)", 48), ("sl(2,5)", 120), ("sl(2,7)", 336), ("sl(3,2)", 168),
    ("q8", 8), ("cyclic(12)", 12), ("cyclic(1)", 1), ("vec(2,3)", 9), ("aff(2,3)", 216),
])
def test_orders(desc, order):
    g = build_group(desc)
    assert g.order == order == expected_order(parse_descriptor(desc))


@pytest.mark.parametrize("d,p", [(2, 3), (2, 5), (2, 7), (3, 2), (3, 3)])
def test_sl_order_formula(d, p):
    assert sl_order(d, p) == oracles.sl_order(d, p)


def test_sl_order_prime_power():
    # |SL(2, Z/p^k)| = p^{3(k-1)} |SL(2, p)|
    assert sl_order(2, 4) == 8 * 6 == 48
    assert sl_order(2, 9) == 27 * 24


@pytest.mark.parametrize("desc", ["sl(2,3)", "q8", "sl(2,4)", "aff(2,3)", "cyclic(7)"])
def test_axioms(desc):
    assert check_group_axioms(build_group(desc))


@pytest.mark.parametrize("desc,k,zsize", [("sl(2,3)", 7, 2), ("sl(2,5)", 9, 2), ("q8", 5, 2),
                                          ("sl(2,7)", 11, 2), ("sl(3,2)", 6, 1),
                                          ("cyclic(6)", 6, 6)])
def test_classes(desc, k, zsize):
    g = build_group(desc)
    cls = conjugacy_classes(g)
    assert cls.count == k
    assert int(cls.sizes.sum()) == g.order
    assert len(center(g)) == zsize
    assert cls.reps[0] == g.identity
    # each class is closed under conjugation and the reps are least indices
    for j in range(cls.count):
        mem = cls.members(j)
        assert mem[0] == cls.reps[j]
        for s in g.generators:
            assert set(g.conj(s, mem).tolist()) == set(mem.tolist())


def test_inverse_class():
    g = build_group("sl(2,7)")
    cls = conjugacy_classes(g)
    for j, r in enumerate(cls.reps):
        assert cls.class_of[g.inv(int(r))] == cls.inverse_class[j]


def test_budget():
    with pytest.raises(BudgetExceeded):
        build_group("sl(2,101)", budget=1000)


@pytest.mark.parametrize("bad", ["sl(2)", "foo(1,2)", "sl(0,3)", "sl(2,1)", "cyclic(0)", "sl 2 3("])
def test_bad_descriptors(bad):
    with pytest.raises(ValueError):
        parse_descriptor(bad)


def test_descriptor_normalization():
    assert str(parse_descriptor(" SL( 2 , 5 ) ".replace(" ", ""))) == "sl(2,5)"


def test_integer_matrix_determinant():
    with pytest.raises(ValueError):
        IntegerMatrix.of([[2, 0], [0, 1]])
    m = IntegerMatrix.of([[2, 1], [1, 1]])
    assert (m @ m.inverse()).is_central()
    assert IntegerMatrix.of([[-1, 0], [0, -1]]).is_central()


def test_index_of_foreign():
    g = build_group("sl(2,3)")
    with pytest.raises(NotInGroup):
        g.index_of(np.array([[2, 0], [0, 1]]))


def test_encode_roundtrip():
    g = build_group("sl(2,5)")
    for i in range(0, g.order, 7):
        assert g.decode(g.encode(i)) == i


def test_word_ball_sizes():
    gens = IntegerMatrixGroup(2).elementary_generators()
    sizes = [len(word_ball(gens, r)) for r in range(4)]
    assert sizes[0] == 1 and sizes[1] == 5
    assert sizes == sorted(sizes)


words = st.lists(st.integers(0, 3), min_size=0, max_size=12)


@given(words, words, st.sampled_from([3, 4, 5, 7, 9]))
def test_reduction_is_homomorphism(w1, w2, m):
    gens = IntegerMatrixGroup(2).elementary_generators()
    g = build_group(f"sl(2,{m})")

    def word(w):
        x = IntegerMatrix.of(np.eye(2, dtype=np.int64))
        for i in w:
            x = x @ gens[i]
        return x

    x, y = word(w1), word(w2)
    assert reduce(x @ y, g) == g.mul(reduce(x, g), reduce(y, g))
    assert reduce(x.inverse(), g) == g.inv(reduce(x, g))


@given(st.integers(0, 119), st.integers(0, 119), st.integers(0, 119))
def test_associativity_sampled(a, b, c):
    g = build_group("sl(2,5)")
    assert g.mul(g.mul(a, b), c) == g.mul(a, g.mul(b, c))
