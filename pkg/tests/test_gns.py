from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tracelab.chartable import character_table
from tracelab.gns import (NotPositive, center, decompose_trace, fd_subrep_detector, gns,
                          invariant_vectors, is_character)
from tracelab.groups import build_group
from tracelab.traces import ClassFunctionTrace, constant_trace, convex_combine, delta_trace

GROUPS = {d: build_group(d) for d in ("q8", "sl(2,3)", "sl(2,5)")}
TABLES = {d: character_table(g) for d, g in GROUPS.items()}


def rows(desc):
    g, t = GROUPS[desc], TABLES[desc]
    return [ClassFunctionTrace.from_table_row(t, i, g) for i in range(t.k)]


@pytest.mark.parametrize("desc", list(GROUPS))
def test_row_models(desc):
    t = TABLES[desc]
    for i, phi in enumerate(rows(desc)):
        m = gns(phi)
        d = int(t.degrees[i])
        assert m.dim == d * d
        g = m.group
        # <pi(g) v, v> = phi(g)
        vals = np.array([np.vdot(m.vector, m.pi(x) @ m.vector) for x in range(g.order)])
        assert np.allclose(vals, phi.on_elements(), atol=1e-9)
        # unitary and multiplicative on generators
        for s in m.generators:
            ps = m.pi(s)
            assert np.allclose(ps.conj().T @ ps, np.eye(m.dim), atol=1e-9)
            assert np.allclose(ps @ m.rho(s), m.rho(s) @ ps, atol=1e-9)
        assert is_character(m)
        assert fd_subrep_detector(m) == d * d


def test_regular_trace():
    g, t = GROUPS["sl(2,3)"], TABLES["sl(2,3)"]
    m = gns(delta_trace(g, t))
    assert m.dim == g.order
    cd = center(m)
    assert cd.dim == t.k
    assert invariant_vectors(m).shape[1] == t.k
    assert not is_character(m)


@given(st.lists(st.integers(0, 6), min_size=9, max_size=9),
       st.integers(0, 1000))
def test_decomposition_recovers_weights(ws, seed):
    desc = "sl(2,5)" if seed % 2 else "sl(2,3)"
    rs = rows(desc)
    ws = ws[: len(rs)]
    if not any(ws):
        ws[0] = 1
    total = sum(ws)
    mix = convex_combine([Fraction(w, total) for w in ws], rs)
    parts = decompose_trace(mix, seed=seed)
    assert len(parts) == sum(1 for w in ws if w)
    got = sorted(w for w, _ in parts)
    assert np.allclose(got, sorted(w / total for w in ws if w), atol=1e-9)
    recon = sum(w * c.class_values for w, c in parts)
    assert np.allclose(recon, mix.class_values, atol=1e-9)
    for _, c in parts:
        assert is_character(c)


def test_center_dimension_independent_of_invariants():
    g, t = GROUPS["q8"], TABLES["q8"]
    rs = rows("q8")
    mix = convex_combine([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)], [rs[0], rs[1], rs[4]])
    m = gns(mix)
    cd = center(m)
    assert cd.dim == invariant_vectors(m).shape[1] == 3
    assert len(cd.projections) == 3
    assert cd.method == "operator"


def test_probe_mode_matches_operator_mode(monkeypatch):
    import tracelab.gns as gns_mod

    phi = delta_trace(GROUPS["sl(2,3)"], TABLES["sl(2,3)"])
    a = center(gns(phi))
    monkeypatch.setattr(gns_mod, "OPERATOR_CENTER_LIMIT", 0)
    b = center(gns(phi))
    assert b.method == "probe" and a.dim == b.dim


def test_not_positive_rejected():
    g = GROUPS["q8"]
    vals = constant_trace(g).class_values.copy()
    vals[1:] = -1
    with pytest.raises(NotPositive):
        gns(ClassFunctionTrace(g, vals))


def test_json_roundtrip_fields():
    import json

    m = gns(rows("q8")[4])
    data = json.loads(m.to_json())
    assert data["dim"] == 4 and data["pivots"][0] == m.group.identity
