"""Character values of SL_2(Z/p) at a unipotent element, and the semidirect analogue."""

from __future__ import annotations

import numpy as np

from tracelab.experiments import ScanPlan, semidirect_scan, vanishing_scan
from tracelab.groups import IntegerMatrix


def main() -> None:
    u = IntegerMatrix.of(np.array([[1, 1], [0, 1]]))
    series = vanishing_scan(ScanPlan("sl", 2, [3, 5, 7, 11, 13], [u]))
    print("max over nontrivial rows of |chi(u)|/chi(1):")
    for e, low in zip(series.entries, series.running_min()):
        print(f"  p={e.modulus:<3} value={e.value:.6f} row={e.row} degree={e.degree} running_min={low:.6f}")

    s = semidirect_scan(3, [2, 3], (np.eye(3, dtype=np.int64), [1, 0, 0]))
    print("SL_3(F_p) x| F_p^3 at a pure translation, faithful rows:")
    for e in s.entries:
        print(f"  p={e.modulus} value={e.value:.6f} (1/(p^3-1) = {1 / (e.modulus**3 - 1):.6f})")


if __name__ == "__main__":
    main()
