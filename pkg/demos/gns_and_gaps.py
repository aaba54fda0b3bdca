"""Decompose a mixed trace on SL_2(Z/3) and compare norm bounds with trace inequalities."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from tracelab.chartable import character_table
from tracelab.gns import center, decompose_trace, gns
from tracelab.groups import build_group
from tracelab.spectral import GroupAlgebraElement, beta_grid, norm_conj, norm_pi
from tracelab.traces import ClassFunctionTrace, convex_combine, is_trace


def main() -> None:
    g = build_group("sl(2,3)")
    t = character_table(g)
    rows = [ClassFunctionTrace.from_table_row(t, i, g) for i in range(t.k)]
    mix = convex_combine([Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)], [rows[0], rows[3], rows[6]])
    print("exact trace check:", is_trace(mix, tol=0).ok)

    model = gns(mix)
    print(f"GNS dimension {model.dim}, center dimension {center(model).dim}")
    for w, chi in decompose_trace(mix):
        print(f"  weight {w:.6f}  character values {np.round(chi.class_values.real, 4)}")

    inv = g.inv(np.array(g.generators))
    a = GroupAlgebraElement.uniform(list(g.generators) + list(inv), g)
    phi = rows[6]
    norm, err = norm_pi(phi, a)
    print(f"||pi(a)|| = {norm:.12f} +- {err:.1e}")
    for rep in norm_pi(phi, a, beta_grid(norm, 5), n_random=200):
        print(f"  pi   beta={rep.beta:.4f} matrix={rep.holds_matrix} inequality={rep.holds_inequality}")
    for rep in norm_conj(phi, a, [0.25, 0.5, 0.75, 1.0], n_random=200):
        print(f"  conj beta={rep.beta:.4f} norm={rep.norm:.6f} agree={rep.agree}")


if __name__ == "__main__":
    main()
