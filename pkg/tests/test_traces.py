from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tracelab.chartable import character_table
from tracelab.groups import IntegerMatrixGroup, build_group, word_ball
from tracelab.traces import (ClassFunctionTrace, NonConvergence, NotConjugationInvariant,
                             PulledBackTrace, all_subgroups, constant_trace, convex_combine,
                             delta_trace, dominates, gram_matrix, irs_to_trace, is_trace,
                             pointwise_limit, uniform_on_conjugacy_class)

GROUP = build_group("sl(2,3)")
TABLE = character_table(GROUP)
ROWS = [ClassFunctionTrace.from_table_row(TABLE, i, GROUP) for i in range(TABLE.k)]


def weights_strategy(k):
    return st.lists(st.integers(0, 20), min_size=k, max_size=k).filter(any)


def test_rows_and_special_traces_are_traces():
    for phi in ROWS + [delta_trace(GROUP, TABLE), constant_trace(GROUP, TABLE)]:
        assert is_trace(phi).ok
        assert is_trace(phi, tol=0).ok


def test_delta_components_sum_to_one():
    assert sum(w for _, w in delta_trace(GROUP, TABLE).components) == 1


@given(weights_strategy(TABLE.k))
def test_mixtures_are_traces_exactly_and_numerically(ws):
    total = sum(ws)
    weights = [Fraction(w, total) for w in ws]
    mix = convex_combine(weights, ROWS)
    assert is_trace(mix, tol=0).ok
    assert is_trace(mix).ok
    assert dict(mix.components) == {i: w for i, w in enumerate(weights) if w}


@given(st.integers(0, TABLE.k - 1), st.integers(1, 6))
def test_negative_component_detected(i, den):
    # 1 + 1/den * (chi_j/d_j - 1) style perturbation pushing a weight below zero
    j = (i + 1) % TABLE.k
    bad = ClassFunctionTrace.from_components(TABLE, {i: Fraction(1) + Fraction(1, den),
                                                     j: -Fraction(1, den)}, GROUP)
    assert not is_trace(bad, tol=0).positive
    assert not is_trace(bad).positive


def test_unnormalized_rejected():
    f = ClassFunctionTrace(GROUP, 2 * ROWS[0].class_values, "", TABLE)
    assert not is_trace(f).normalized


def test_full_gram_regime_agrees_with_class_spectrum():
    for phi in ROWS:
        bare = ClassFunctionTrace(GROUP, phi.class_values)
        rep = is_trace(bare)
        assert rep.regime == "full-gram" and rep.ok


def test_gram_matrix_is_hermitian_psd():
    phi = ROWS[3]
    g = np.arange(GROUP.order)
    gram = gram_matrix(phi, g, GROUP.mul, GROUP.inv)
    assert np.allclose(gram, gram.conj().T)
    assert np.linalg.eigvalsh(gram)[0] > -1e-9


def test_from_element_values_rejects_non_class_function():
    vals = np.zeros(GROUP.order)
    vals[GROUP.identity] = 1
    vals[(GROUP.identity + 1) % GROUP.order] = 0.5
    with pytest.raises(NotConjugationInvariant):
        ClassFunctionTrace.from_element_values(GROUP, vals)


@given(st.integers(0, TABLE.k - 1), st.integers(0, TABLE.k - 1), st.integers(1, 10))
def test_dominance(i, j, n):
    # sum of two rows with weight 1/2 dominates each with alpha = 1/2
    mix = convex_combine([Fraction(1, 2), Fraction(1, 2)], [ROWS[i], ROWS[j]])
    assert dominates(mix, ROWS[i], Fraction(1, 2))
    alpha = Fraction(n, 10)
    expect = alpha <= (Fraction(1, 2) if i != j else 1)
    assert dominates(mix, ROWS[i], alpha) == expect
    # the floating path agrees with the exact one
    assert dominates(mix, ROWS[i], float(alpha) * (1 - 1e-6)) == (float(alpha) * (1 - 1e-6) <= (0.5 if i != j else 1))


def test_irs_traces():
    for h in all_subgroups(GROUP):
        phi = irs_to_trace(uniform_on_conjugacy_class(GROUP, h))
        assert is_trace(phi).ok


def test_pullback_sequence_and_limit():
    gens = IntegerMatrixGroup(2).elementary_generators(symmetric=True)
    ball = word_ball(gens, 2)
    seq = []
    for p in (5, 7, 11, 13):
        g = build_group(f"sl(2,{p})")
        seq.append(PulledBackTrace(g, character_table(g), 0))
    lim = pointwise_limit(seq, ball)
    assert all(abs(lim(x) - 1) < 1e-12 for x in ball)
    # the Gram matrix on X needs values on X^-1 X
    rep = is_trace(lim, word_ball(gens, 1))
    assert rep.ok
    with pytest.raises(KeyError):
        is_trace(lim, ball)
    steinberg = []
    for p in (5, 7):
        g = build_group(f"sl(2,{p})")
        t = character_table(g)
        steinberg.append(PulledBackTrace(g, t, int(np.argmax(t.degrees == p))))
    with pytest.raises(NonConvergence):
        pointwise_limit(steinberg + steinberg[:1], ball, window=3)


def test_integer_trace_needs_set():
    g = build_group("sl(2,5)")
    with pytest.raises(ValueError):
        is_trace(PulledBackTrace(g, character_table(g), 0))


def test_convex_combine_validation():
    with pytest.raises(ValueError):
        convex_combine([0.5, 0.6], ROWS[:2])
    with pytest.raises(ValueError):
        convex_combine([1], ROWS[:2])
    other = build_group("q8")
    with pytest.raises(TypeError):
        convex_combine([0.5, 0.5], [ROWS[0], constant_trace(other)])
