from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from tracelab.chartable import character_table
from tracelab.groups import build_group
from tracelab.relative import (AutomorphismAction, HypothesisError, NotInvariant,
                               OrbitBudgetExceeded, Permutation, alpha_gap, dual_orbit_trace,
                               dual_orbits, inner_automorphism, is_automorphism,
                               is_relative_character, lambda_orbits_on_classes, orbit,
                               orbit_trace, orbits_of_denominator, relative_invariance,
                               torus_limit_scan, torus_trace_check)
from tracelab.spectral import GroupAlgebraElement
from tracelab.traces import ClassFunctionTrace

SL2_GENS = [[[1, 1], [0, 1]], [[1, 0], [1, 1]]]


@given(st.permutations(range(6)), st.permutations(range(6)), st.permutations(range(6)))
def test_permutation_group_laws(a, b, c):
    a, b, c = Permutation(tuple(a)), Permutation(tuple(b)), Permutation(tuple(c))
    ident = Permutation(tuple(range(6)))
    assert (a @ b) @ c == a @ (b @ c)
    assert a @ a.inverse() == ident == a.inverse() @ a
    x = np.arange(6)
    assert np.array_equal((a @ b).array()[x], a.array()[b.array()[x]])


def test_inner_automorphisms():
    g = build_group("sl(2,3)")
    for s in range(g.order):
        assert is_automorphism(g, inner_automorphism(g, s))
    assert AutomorphismAction.inner(g).contains_inner
    swap = list(range(g.order))
    a, b = [x for x in range(g.order) if x != g.identity][:2]
    swap[a], swap[b] = swap[b], swap[a]
    assert not is_automorphism(g, Permutation(tuple(swap)))
    with pytest.raises(ValueError):
        AutomorphismAction(g, [Permutation(tuple(swap))])


def test_missing_inner_automorphisms_rejected():
    g = build_group("q8")
    act = AutomorphismAction(g, [])
    assert not act.contains_inner
    phi = ClassFunctionTrace.from_table_row(character_table(g), 0, g)
    with pytest.raises(HypothesisError):
        is_relative_character(phi, act)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_dual_orbits_give_relative_characters(p):
    g = build_group(f"vec(2,{p})")
    act = AutomorphismAction.linear(g, SL2_GENS)
    assert act.contains_inner
    orbs = dual_orbits(p, 2, SL2_GENS)
    assert sorted(len(o) for o in orbs) == [1, p * p - 1]
    assert lambda_orbits_on_classes(g, act) == 2
    for o in orbs:
        phi = dual_orbit_trace(g, o)
        assert relative_invariance(phi, act)
        rep = is_relative_character(phi, act)
        assert rep.is_character and rep.agree
    mix = dual_orbit_trace(g, list(orbs[0]) * (p * p - 1) + list(orbs[1]))
    rep = is_relative_character(mix, act)
    assert not rep.is_character and rep.agree and rep.dim_invariant == 2


def test_non_invariant_trace_rejected():
    g = build_group("vec(2,3)")
    act = AutomorphismAction.linear(g, SL2_GENS)
    phi = dual_orbit_trace(g, [(1, 0)])
    with pytest.raises(NotInvariant):
        is_relative_character(phi, act)


def test_alpha_gap_agreement():
    g = build_group("vec(2,3)")
    act = AutomorphismAction.linear(g, SL2_GENS, with_inner=False)
    nonzero = [x for x in itertools.product(range(3), repeat=2) if any(x)]
    phi = dual_orbit_trace(g, nonzero)
    gens = act.generators + [p.inverse() for p in act.generators]
    a = GroupAlgebraElement.of({p: Fraction(1, len(gens)) for p in gens})
    reps = alpha_gap(phi, act, a, np.linspace(0.05, 1, 12), n_random=200)
    assert all(r.agree for r in reps)
    assert any(r.holds_matrix for r in reps) and not all(r.holds_matrix for r in reps)


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_torus_orbit_single_and_value(q):
    orbs = orbits_of_denominator(q, 3)
    assert len(orbs) == 1 and orbs[0].size == q**3 - 1
    tr = orbit_trace(orbs[0])
    # brute force over all nonzero points
    pts = np.array([x for x in itertools.product(range(q), repeat=3) if any(x)])
    for m in [(1, 0, 0), (1, 2, -1), (0, 0, q + 1)]:
        brute = np.exp(2j * np.pi * (pts @ np.array(m)) / q).mean()
        assert abs(tr(m) - brute) < 1e-12
        assert tr.rational(m) == Fraction(-1, q**3 - 1)
        assert abs(float(tr.rational(m)) - oracles.torus_value(q)) < 1e-15
    chk = torus_trace_check(tr, 1)
    assert chk["normalized"] and chk["positive"] and chk["invariant"]


def test_composite_denominator_orbits_partition():
    q = 4
    orbs = orbits_of_denominator(q, 3)
    assert sum(o.size for o in orbs) == 64 - 8  # exact denominator 4
    for o in orbs:
        assert torus_trace_check(orbit_trace(o), 1)["positive"]


def test_orbit_budget():
    with pytest.raises(OrbitBudgetExceeded):
        orbit((1, 0, 0), 11, budget=100)


def test_scan_flags_and_maxima():
    s = torus_limit_scan(3, [1, 2, 3, 5], 1)
    assert "trivial" in s.flags[1]
    for q in (2, 3, 5):
        assert abs(s.maxima[q] - 1 / (q**3 - 1)) < 1e-15
    s2 = torus_limit_scan(2, [3], 1)
    assert "d < 3" in s2.flags[3]
    assert s.to_csv().splitlines()[0] == "q,orbit_id,orbit_size,m,phi,abs_phi"
