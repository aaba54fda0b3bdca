"""Traces relative to a group of automorphisms, and orbit traces on Z^d."""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cyclotomic import CyclotomicValue
from .gns import GnsModel, center, gns, null_space
from .groups import FiniteGroup, IntegerMatrix, _int_det, conjugacy_classes, int_adjugate
from .spectral import (GroupAlgebraElement, FormPencil, _report, _test_set, certified_norm,
                       self_convolution, sweep_pencil)
from .traces import ClassFunctionTrace

DEFAULT_ORBIT_BUDGET = 200_000
EXACT_Q_LIMIT = 64


class HypothesisError(ValueError):
    """Inner automorphisms are not contained in the acting group."""


class NotInvariant(ValueError):
    """The trace is not invariant under the action, so it does not act on H."""


class OrbitBudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# automorphisms of a finite group


@dataclass(frozen=True)
class Permutation:
    """A bijection of element indices; ``p @ q`` applies q first."""

    images: tuple[int, ...]

    @classmethod
    def of(cls, arr) -> "Permutation":
        return cls(tuple(int(x) for x in arr))

    def array(self) -> np.ndarray:
        return np.array(self.images, dtype=np.int64)

    def __matmul__(self, other: "Permutation") -> "Permutation":
        a = self.array()
        return Permutation.of(a[other.array()])

    def inverse(self) -> "Permutation":
        a = self.array()
        out = np.empty_like(a)
        out[a] = np.arange(len(a))
        return Permutation.of(out)

    def flat(self) -> tuple[int, ...]:
        return self.images


@dataclass
class AutomorphismAction:
    group: FiniteGroup
    generators: list[Permutation]
    contains_inner: bool = False

    def __post_init__(self):
        for p in self.generators:
            if not is_automorphism(self.group, p):
                raise ValueError("generator is not an automorphism")
        self.contains_inner = _contains_inner(self.group, self.generators)

    @classmethod
    def inner(cls, group: FiniteGroup) -> "AutomorphismAction":
        return cls(group, [inner_automorphism(group, int(s)) for s in group.generators])

    @classmethod
    def linear(cls, group: FiniteGroup, matrices: Sequence, with_inner: bool = True) -> "AutomorphismAction":
        """Matrices acting on the translation part of an affine group over Z/p.

        ``group`` is vec(d, p) (or any group of affine matrices); A sends
        [[B, v], [0, 1]] to [[A B A^-1, A v], [0, 1]], i.e. conjugation by
        diag(A, 1).
        """
        gens = []
        p = group.modulus
        d = group.dim - 1
        for a in matrices:
            a = np.asarray(a, dtype=np.int64) % p
            big = np.eye(d + 1, dtype=np.int64)
            big[:d, :d] = a
            big_inv = np.eye(d + 1, dtype=np.int64)
            det = _int_det(a.tolist()) % p
            adj = np.array(int_adjugate(a.tolist()), dtype=np.int64)
            big_inv[:d, :d] = adj * pow(int(det), -1, p) % p
            conj = np.matmul(np.matmul(big[None], group.mats), big_inv[None]) % p
            gens.append(Permutation.of(group.index_of(conj)))
        if with_inner:
            gens += [inner_automorphism(group, int(s)) for s in group.generators]
        return cls(group, gens)

    def closure(self, budget: int = 100_000) -> list[Permutation]:
        return _closure(self.group.order, self.generators, budget)


def _closure(n: int, gens: Sequence[Permutation], budget: int = 100_000) -> list[Permutation]:
    ident = Permutation.of(range(n))
    seen = {ident}
    out = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = s @ x
                if y not in seen:
                    seen.add(y)
                    out.append(y)
                    nxt.append(y)
                    if len(out) > budget:
                        raise OrbitBudgetExceeded("automorphism group too large")
        frontier = nxt
    return out


def inner_automorphism(group: FiniteGroup, s: int) -> Permutation:
    """x -> s x s^-1."""
    return Permutation.of(group.conj(s, np.arange(group.order)))


def is_automorphism(group: FiniteGroup, p: Permutation) -> bool:
    a = p.array()
    n = group.order
    if sorted(a.tolist()) != list(range(n)):
        return False
    if n <= 2000:
        x, y = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        x, y = x.ravel(), y.ravel()
    else:
        rng = np.random.default_rng(0)
        x, y = rng.integers(0, n, 100_000), rng.integers(0, n, 100_000)
    return bool(np.array_equal(a[group.mul(x, y)], group.mul(a[x], a[y])))


def _contains_inner(group: FiniteGroup, gens: list[Permutation]) -> bool:
    inner = [inner_automorphism(group, int(s)) for s in group.generators]
    ident = Permutation.of(range(group.order))
    if all(p == ident or p in gens for p in inner):
        return True
    try:
        closure = set(_closure(group.order, gens))
    except OrbitBudgetExceeded:
        return False
    return all(p in closure for p in inner)


def relative_invariance(phi: ClassFunctionTrace, action: AutomorphismAction, tol: float = 1e-12) -> bool:
    f = phi.on_elements()
    return all(np.max(np.abs(f[p.array()] - f)) <= tol for p in action.generators)


# ---------------------------------------------------------------------------
# the alpha representation


def alpha_matrix(model: GnsModel, p: Permutation) -> np.ndarray:
    """U(lambda): u_g -> u_{lambda(g)} in the model's coordinates."""
    cols = p.array()[model.pivots]
    return model.coords[:, cols] @ model._rinv


def _check_invariant(phi, action):
    if not relative_invariance(phi, action, tol=1e-9):
        raise NotInvariant("trace is not invariant under the action")


def alpha_pencil(phi: ClassFunctionTrace, b: GroupAlgebraElement) -> FormPencil:
    """Forms of phi(sum_l b_l x* x^l), phi(x* x) and |phi(x)|^2 on C[G]."""
    g = phi.group
    f = phi.on_elements()
    X = np.arange(g.order)
    hinv = g.inv(X)[:, None]
    B = np.zeros((len(X), len(X)), dtype=complex)
    for lam, c in b.terms:
        B += complex(c) * f[g.mul(hinv, lam.array()[None, :])]
    gram = f[g.mul(hinv, X[None, :])]
    return FormPencil(B, gram, np.outer(f.conj(), f))


def alpha_gap(phi: ClassFunctionTrace, action: AutomorphismAction, a: GroupAlgebraElement,
              beta, model: GnsModel | None = None, n_random: int = 1000, seed: int = 0,
              tol: float = 1e-9):
    """Restricted norm of alpha(a) against phi(sum b_l x* x^l - beta x*x) <= (1-beta)|phi(x)|^2.

    ``a`` is a GroupAlgebraElement whose keys are Permutation objects.
    """
    _check_invariant(phi, action)
    model = gns(phi) if model is None else model
    A = sum(complex(c) * alpha_matrix(model, lam) for lam, c in a.terms)
    v = model.vector
    P = np.eye(model.dim) - np.outer(v, v.conj())
    norm, err = certified_norm(A @ P)
    pencil = alpha_pencil(phi, self_convolution(a))
    betas = [beta] if np.ndim(beta) == 0 else list(beta)
    sweeps = sweep_pencil(pencil, betas, np.random.default_rng(seed), n_random, tol)
    ts = _test_set(phi.group.order, n_random)
    reps = [_report("alpha", b_, norm, err, sw, ts, tol) for b_, sw in zip(betas, sweeps)]
    return reps[0] if np.ndim(beta) == 0 else reps


@dataclass
class RelativeCharacterReport:
    is_character: bool
    dim_invariant: int
    dim_center_commutant: int

    @property
    def agree(self) -> bool:
        return self.dim_invariant == self.dim_center_commutant


def is_relative_character(phi: ClassFunctionTrace, action: AutomorphismAction,
                          model: GnsModel | None = None, seed: int = 0) -> RelativeCharacterReport:
    """Decide extremality among invariant traces in two independent ways.

    One route takes the alpha-invariant vectors. The other intersects the
    center of M with the commutant of U(Lambda).
    """
    if not action.contains_inner:
        raise HypothesisError("the action must contain all inner automorphisms")
    _check_invariant(phi, action)
    model = gns(phi) if model is None else model
    n = model.dim
    us = [alpha_matrix(model, p) for p in action.generators]
    inv_dim = null_space([u - np.eye(n) for u in us]).shape[1]
    zs = center(model, seed=seed, full_bases=False).center
    blocks = [np.stack([(z @ u - u @ z).ravel() for z in zs], axis=1) for u in us]
    com_dim = null_space(blocks).shape[1]
    return RelativeCharacterReport(inv_dim == 1, inv_dim, com_dim)


def lambda_orbits_on_classes(group: FiniteGroup, action: AutomorphismAction) -> int:
    """Number of orbits of the acting group on conjugacy classes."""
    cls = conjugacy_classes(group)
    parent = list(range(cls.count))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in action.generators:
        img = cls.class_of[p.array()[cls.reps]]
        for j, k in enumerate(img):
            a, b = find(j), find(int(k))
            if a != b:
                parent[a] = b
    return len({find(i) for i in range(cls.count)})


# ---------------------------------------------------------------------------
# finite abelian groups F_p^d and dual orbits


def translation_vectors(group: FiniteGroup) -> np.ndarray:
    """Translation parts v of [[I, v], [0, 1]] for a vec(d, p) group."""
    d = group.dim - 1
    return group.mats[:, :d, d]


def dual_orbit_trace(group: FiniteGroup, duals: Sequence, label: str = "") -> ClassFunctionTrace:
    """Average of the characters v -> exp(2 pi i <xi, v> / p) over ``duals``."""
    p = group.modulus
    vs = translation_vectors(group)
    xis = np.asarray(duals, dtype=np.int64).reshape(len(duals), -1)
    phases = (vs @ xis.T) % p
    vals = np.exp(2j * np.pi * phases / p).mean(axis=1)
    return ClassFunctionTrace.from_element_values(group, vals, label or "dual-orbit")


def dual_orbits(p: int, d: int, matrices: Sequence) -> list[np.ndarray]:
    """Orbits of the dual action xi -> A^-T xi on F_p^d, as point arrays."""
    inv_t = []
    for a in matrices:
        a = np.asarray(a, dtype=np.int64)
        det = _int_det(a.tolist()) % p
        adj = np.array(int_adjugate(a.tolist()), dtype=np.int64)
        inv_t.append((adj * pow(int(det), -1, p)).T % p)
    pts = [np.array(t) for t in itertools.product(range(p), repeat=d)]
    seen: set = set()
    out = []
    for x in pts:
        key = tuple(int(c) for c in x)
        if key in seen:
            continue
        orb = _bfs_orbit(key, inv_t, p, 10**6)
        seen.update(map(tuple, orb.tolist()))
        out.append(orb)
    return out


# ---------------------------------------------------------------------------
# rational points of the torus


@dataclass(frozen=True)
class RationalOrbit:
    q: int
    points: np.ndarray  # numerators in [0, q), one row per point

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _bfs_orbit(start: tuple, mats: Sequence[np.ndarray], q: int, budget: int) -> np.ndarray:
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        x = np.array(queue.popleft(), dtype=np.int64)
        for a in mats:
            y = tuple(int(c) for c in (a @ x) % q)
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
                if len(order) > budget:
                    raise OrbitBudgetExceeded(f"orbit exceeds {budget} points")
    return np.array(order, dtype=np.int64)


def elementary_matrices(d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        for j in range(d):
            if i != j:
                for t in (1, -1):
                    e = np.eye(d, dtype=np.int64)
                    e[i, j] = t
                    out.append(e)
    return out


def orbit(v: Sequence, q: int, generators: Sequence | None = None,
          budget: int = DEFAULT_ORBIT_BUDGET) -> RationalOrbit:
    """Orbit of the point v/q of the torus under x -> A x (mod 1)."""
    v = tuple(int(c) % q for c in v) if q > 0 else tuple(0 for _ in v)
    gens = elementary_matrices(len(v)) if generators is None else [
        np.asarray(g.rows if isinstance(g, IntegerMatrix) else g, dtype=np.int64) for g in generators]
    return RationalOrbit(q, _bfs_orbit(v, gens, max(q, 1), budget))


@dataclass(frozen=True)
class OrbitTrace:
    """phi(m) = mean over the orbit of exp(2 pi i <x, m> / q)."""

    orbit: RationalOrbit

    def _counts(self, m) -> np.ndarray:
        q = max(self.orbit.q, 1)
        r = (self.orbit.points @ np.asarray(m, dtype=np.int64)) % q
        return np.bincount(r, minlength=q)

    def exact(self, m) -> tuple[CyclotomicValue, int]:
        """(numerator as an element of Z[zeta_q], denominator |O|)."""
        q = max(self.orbit.q, 1)
        counts = self._counts(m)
        return CyclotomicValue.from_dense(counts, q), self.orbit.size

    def rational(self, m) -> Fraction | None:
        if self.orbit.q > EXACT_Q_LIMIT:
            return None
        num, den = self.exact(m)
        r = num.rational()
        return None if r is None else r / den

    def __call__(self, m) -> complex:
        q = max(self.orbit.q, 1)
        counts = self._counts(m)
        return complex(np.sum(counts * np.exp(2j * np.pi * np.arange(q) / q)) / self.orbit.size)


def orbit_trace(o: RationalOrbit) -> OrbitTrace:
    return OrbitTrace(o)


def lattice_ball(d: int, M: int, nonzero: bool = False) -> list[tuple[int, ...]]:
    pts = [m for m in itertools.product(range(-M, M + 1), repeat=d)]
    if nonzero:
        pts = [m for m in pts if any(m)]
    return pts


def torus_trace_check(phi: OrbitTrace, M: int, tol: float = 1e-9) -> dict:
    """Trace axioms on the ball |m| <= M and invariance under the transposed generators."""
    ball = lattice_ball(phi.orbit.d, M)
    arr = np.array(ball, dtype=np.int64)
    diffs = arr[:, None, :] - arr[None, :, :]
    q = max(phi.orbit.q, 1)
    pts = phi.orbit.points
    phase = np.exp(2j * np.pi * ((diffs @ pts.T) % q) / q).mean(axis=2)
    gram = (phase + phase.conj().T) / 2
    mins = float(np.linalg.eigvalsh(gram)[0])
    inv_ok = True
    for a in elementary_matrices(phi.orbit.d):
        for m in ball:
            am = tuple(int(c) for c in a.T @ np.array(m))
            inv_ok &= abs(phi(am) - phi(m)) <= tol
    return {"normalized": abs(phi((0,) * phi.orbit.d) - 1) <= tol, "positive": mins >= -tol,
            "min_eigenvalue": mins, "invariant": bool(inv_ok)}


def exact_denominator_points(q: int, d: int) -> np.ndarray:
    pts = np.array(list(itertools.product(range(q), repeat=d)), dtype=np.int64)
    g = np.gcd.reduce(np.concatenate([pts, np.full((len(pts), 1), q)], axis=1), axis=1)
    return pts[g == 1]


def orbits_of_denominator(q: int, d: int, budget: int = DEFAULT_ORBIT_BUDGET) -> list[RationalOrbit]:
    if q == 1:
        return [RationalOrbit(1, np.zeros((1, d), dtype=np.int64))]
    pts = exact_denominator_points(q, d)
    if len(pts) > budget:
        raise OrbitBudgetExceeded(f"{len(pts)} points of denominator {q}")
    seen: set = set()
    out = []
    for x in pts:
        key = tuple(int(c) for c in x)
        if key in seen:
            continue
        o = orbit(key, q, budget=budget)
        seen.update(map(tuple, o.points.tolist()))
        out.append(o)
    return out


@dataclass
class TorusScanRow:
    q: int
    orbit_id: int
    orbit_size: int
    m: tuple
    value: Fraction | complex

    @property
    def abs_value(self):
        return abs(self.value)


@dataclass
class TorusSeries:
    d: int
    ball: int
    maxima: dict  # q -> max |phi(m)|
    rows: list
    flags: dict  # q -> note

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "orbit_id", "orbit_size", "m", "phi", "abs_phi"])
        for r in self.rows:
            w.writerow([r.q, r.orbit_id, r.orbit_size, " ".join(map(str, r.m)),
                        _fmt(r.value), _fmt(r.abs_value)])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        if abs(x.imag) < 1e-15:
            return f"{x.real:.12g}"
        return f"{x.real:.12g}{x.imag:+.12g}j"
    return f"{x:.12g}"


def torus_limit_scan(d: int, denominators: Sequence[int], M: int,
                     budget: int = DEFAULT_ORBIT_BUDGET) -> TorusSeries:
    """For each q, max |phi(m)| over orbits of exact denominator q and 0 < |m| <= M.

    Frequencies m divisible by q see every orbit trivially (phi(m) = 1), so
    they are listed but excluded from the maximum.
    """
    ms = lattice_ball(d, M, nonzero=True)
    rows, maxima, flags = [], {}, {}
    for q in denominators:
        if d < 3:
            flags[q] = "d < 3: outside the hypothesis of the limit theorem"
        orbs = orbits_of_denominator(q, d, budget)
        best = 0.0 if q > 1 else 1.0
        if q == 1:
            flags[q] = "trivial denominator: only the zero orbit"
        for oid, o in enumerate(orbs):
            tr = orbit_trace(o)
            for m in ms:
                val = tr.rational(m)
                if val is None:
                    val = tr(m)
                rows.append(TorusScanRow(q, oid, o.size, m, val))
                if q > 1 and any(c % q for c in m):
                    best = max(best, float(abs(val)))
        maxima[q] = best
    return TorusSeries(d, M, maxima, rows, flags)
