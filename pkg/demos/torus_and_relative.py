"""Orbit traces on the 3-torus and relative characters of F_p^2 under SL_2."""

from __future__ import annotations

import itertools

from tracelab.groups import build_group
from tracelab.relative import (AutomorphismAction, dual_orbit_trace, is_relative_character,
                               torus_limit_scan)


def main() -> None:
    scan = torus_limit_scan(3, [2, 3, 5, 7], 1)
    print("max |phi(m)| over orbits of exact denominator q:")
    for q, v in scan.maxima.items():
        print(f"  q={q} max={v:.8f} 1/(q^3-1)={1 / (q**3 - 1):.8f}")

    g = build_group("vec(2,3)")
    act = AutomorphismAction.linear(g, [[[1, 1], [0, 1]], [[1, 0], [1, 1]]])
    nonzero = [x for x in itertools.product(range(3), repeat=2) if any(x)]
    for label, duals in [("nonzero orbit", nonzero), ("half trivial", [(0, 0)] * 8 + nonzero)]:
        rep = is_relative_character(dual_orbit_trace(g, duals), act)
        print(f"  {label}: relative character={rep.is_character} "
              f"(alpha-invariant dim {rep.dim_invariant}, center-commutant dim {rep.dim_center_commutant})")


if __name__ == "__main__":
    main()
