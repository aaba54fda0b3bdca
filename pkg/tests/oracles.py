"""Independent reference computations used to pin derived values.

Nothing here touches the modular character-table code: characters come from
splitting the regular representation with a random central element.
"""

from __future__ import annotations

import math

import numpy as np

from tracelab.groups import FiniteGroup, conjugacy_classes


def regular_rep_characters(group: FiniteGroup, seed: int = 0) -> tuple[np.ndarray, list[int]]:
    """Irreducible characters (rows, on class representatives) and degrees.

    L(z) for a generic self-adjoint central z acts on each isotypic block of
    C[G] (dimension d^2) by one scalar; the block projections P give
    chi(g) = tr(L(g) P) / d.
    """
    n = group.order
    cls = conjugacy_classes(group)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(cls.count) + 1j * rng.standard_normal(cls.count)
    coeff = c[cls.class_of] + np.conj(c[cls.class_of[group.inv(np.arange(n))]])
    # L(z)[x, y] = z(x y^-1)
    X, Y = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    Lz = coeff[group.mul(X, group.inv(Y))]
    evals, evecs = np.linalg.eigh((Lz + Lz.conj().T) / 2)
    blocks, start = [], 0
    for i in range(1, n + 1):
        if i == n or abs(evals[i] - evals[start]) > 1e-6 * max(1.0, abs(evals[start])):
            blocks.append(evecs[:, start:i])
            start = i
    chars, degs = [], []
    for V in blocks:
        d = int(round(math.sqrt(V.shape[1])))
        assert d * d == V.shape[1], "eigenvalue collision in the oracle"
        row = []
        for g in cls.reps:
            # L(g) V: (L(g) w)(x) = w(g^-1 x)
            LgV = V[group.mul(np.full(n, group.inv(int(g))), np.arange(n))]
            row.append(np.trace(V.conj().T @ LgV) / d)
        chars.append(row)
        degs.append(d)
    return np.array(chars), degs


def same_tables(numeric_a: np.ndarray, numeric_b: np.ndarray, tol: float = 1e-8) -> bool:
    """Equal as sets of rows."""
    if numeric_a.shape != numeric_b.shape:
        return False
    used = set()
    for row in numeric_a:
        hit = [j for j, r in enumerate(numeric_b) if j not in used and np.max(np.abs(r - row)) < tol]
        if not hit:
            return False
        used.add(hit[0])
    return True


def sl2_unipotent_max(p: int) -> float:
    """max over nontrivial irreducibles of |chi(u)| / chi(1) for u = [[1,1],[0,1]] in SL(2,p)."""
    if p == 2:
        return 1.0
    if p == 3:
        return 1.0  # the two nontrivial linear characters
    if p % 4 == 3:
        return math.sqrt(p + 1) / (p - 1)
    return (1 + math.sqrt(p)) / (p - 1)


def sl_order(d: int, p: int) -> int:
    out = p ** (d * (d - 1) // 2)
    for i in range(2, d + 1):
        out *= p**i - 1
    return out


def torus_value(q: int, d: int = 3) -> float:
    """Orbit trace of the nonzero points of (Z/q)^d at any m not divisible by q, q prime."""
    return -1 / (q**d - 1)
