"""Traces: normalized, conjugation-invariant, positive-definite functions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .chartable import CharacterTable
from .groups import FiniteGroup, IntegerMatrix, conjugacy_classes, reduce

DEFAULT_TOL = 1e-9
FULL_GRAM_LIMIT = 2000
IRS_ORDER_LIMIT = 500


class NonConvergence(RuntimeError):
    """Sequence values did not settle on the requested finite set."""


class NotConjugationInvariant(ValueError):
    pass


# ---------------------------------------------------------------------------
# trace objects


@dataclass(frozen=True)
class ClassFunctionTrace:
    """A class function on a finite group, one value per conjugacy class.

    ``components`` optionally holds exact rational weights over the normalized
    irreducible rows of ``table``; traces built from table rows carry them and
    they survive convex combination, which makes exact checks possible.
    """

    group: FiniteGroup
    class_values: np.ndarray
    label: str = ""
    table: CharacterTable | None = field(default=None, compare=False)
    components: tuple[tuple[int, Fraction], ...] | None = None

    @classmethod
    def from_table_row(cls, table: CharacterTable, i: int, group: FiniteGroup | None = None):
        if group is None:
            from .groups import build_group

            group = build_group(table.descriptor)
        vals = table.normalized(i)
        return cls(group, vals, f"chi{i}/{int(table.degrees[i])}", table, ((i, Fraction(1)),))

    @classmethod
    def from_components(cls, table: CharacterTable, weights: dict, group: FiniteGroup, label=""):
        comps = tuple(sorted((int(i), Fraction(w)) for i, w in weights.items() if w))
        vals = sum(float(w) * table.normalized(i) for i, w in comps)
        return cls(group, np.asarray(vals, dtype=complex), label, table, comps)

    @classmethod
    def from_element_values(cls, group: FiniteGroup, values, label: str = "", tol: float = DEFAULT_TOL):
        """Build from per-element values, refusing non-class functions."""
        values = np.asarray(values, dtype=complex)
        cls_t = conjugacy_classes(group)
        per_class = values[cls_t.reps]
        if np.max(np.abs(values - per_class[cls_t.class_of]), initial=0.0) > tol:
            raise NotConjugationInvariant("values are not constant on conjugacy classes")
        return cls(group, per_class, label)

    def __call__(self, g):
        vals = self.class_values[conjugacy_classes(self.group).class_of[g]]
        return complex(vals) if np.ndim(vals) == 0 else vals

    def on_elements(self) -> np.ndarray:
        return self.class_values[conjugacy_classes(self.group).class_of]

    def component_weights(self) -> np.ndarray:
        """Weights c_i with phi = sum c_i chi_i / d_i (needs a table)."""
        if self.table is None:
            raise ValueError("no character table attached")
        return fourier_weights(self.class_values, self.table)

    def to_dict(self) -> dict:
        out = {
            "backend": "class-function",
            "group": self.group.descriptor,
            "label": self.label,
            "values": [[float(v.real), float(v.imag)] for v in self.class_values],
        }
        if self.components is not None:
            out["components"] = [[i, str(w)] for i, w in self.components]
        return out


def fourier_weights(class_values: np.ndarray, table: CharacterTable) -> np.ndarray:
    """c_i = d_i <f, chi_i>, so that f = sum_i c_i chi_i / d_i."""
    inner = table.numeric.conj() @ (table.class_sizes * class_values) / table.order
    return table.degrees * inner


def delta_trace(group: FiniteGroup, table: CharacterTable | None = None) -> ClassFunctionTrace:
    vals = np.zeros(conjugacy_classes(group).count, dtype=complex)
    vals[0] = 1.0
    comps = None
    if table is not None:
        comps = tuple((i, Fraction(int(d) ** 2, table.order)) for i, d in enumerate(table.degrees))
    return ClassFunctionTrace(group, vals, "delta_e", table, comps)


def constant_trace(group: FiniteGroup, table: CharacterTable | None = None) -> ClassFunctionTrace:
    vals = np.ones(conjugacy_classes(group).count, dtype=complex)
    comps = ((0, Fraction(1)),) if table is not None else None
    return ClassFunctionTrace(group, vals, "one", table, comps)


@dataclass(frozen=True)
class PulledBackTrace:
    """A normalized character of SL_d(Z/m) viewed as a trace on SL_d(Z)."""

    group: FiniteGroup
    table: CharacterTable
    row: int
    label: str = ""

    @property
    def modulus(self) -> int:
        return self.group.modulus

    def __call__(self, gamma: IntegerMatrix) -> complex:
        return pullback(self.table, self.row, gamma, self.group)

    def values(self, gammas: Sequence[IntegerMatrix]) -> np.ndarray:
        from .groups import reduce_many

        idx = reduce_many(gammas, self.group)
        cls = conjugacy_classes(self.group).class_of[idx]
        return self.table.normalized(self.row)[cls]


@dataclass(frozen=True)
class PartialTrace:
    """Values of a (limit) trace on a finite set of integer matrices."""

    values: dict
    tolerance: float = 0.0
    label: str = ""

    def __call__(self, gamma: IntegerMatrix) -> complex:
        try:
            return self.values[gamma]
        except KeyError:
            raise KeyError(f"partial trace undefined at {gamma.rows}") from None

    @property
    def support(self) -> list[IntegerMatrix]:
        return list(self.values)


def pullback(table: CharacterTable, row: int, gamma: IntegerMatrix, group: FiniteGroup) -> complex:
    """Normalized character ``row`` at the reduction of ``gamma``."""
    j = conjugacy_classes(group).class_of[reduce(gamma, group)]
    return complex(table.normalized(row)[j])


def evaluate(phi, elems) -> np.ndarray:
    """Values of any trace object on a sequence of elements."""
    if isinstance(phi, ClassFunctionTrace):
        return np.asarray(phi(np.asarray(elems, dtype=np.int64)), dtype=complex)
    if isinstance(phi, PulledBackTrace):
        return phi.values(elems)
    return np.array([phi(g) for g in elems], dtype=complex)


# ---------------------------------------------------------------------------
# trace axioms


@dataclass
class TraceReport:
    normalized: bool
    conjugation_invariant: bool
    positive: bool
    min_eigenvalue: float
    regime: str
    size: int

    @property
    def ok(self) -> bool:
        return self.normalized and self.conjugation_invariant and self.positive


def gram_matrix(phi, elems, mul: Callable, inv: Callable) -> np.ndarray:
    """``[phi(s_j^-1 s_i)]_{ij}`` for a list of elements."""
    if isinstance(phi, ClassFunctionTrace):
        g = phi.group
        e = np.asarray(elems, dtype=np.int64)
        prod = g.mul(g.inv(e)[None, :], e[:, None])
        return np.asarray(phi(prod), dtype=complex)
    n = len(elems)
    out = np.empty((n, n), dtype=complex)
    invs = [inv(s) for s in elems]
    for i, si in enumerate(elems):
        out[i] = evaluate(phi, [mul(invs[j], si) for j in range(n)])
    return out


def is_trace(phi, S=None, tol: float = DEFAULT_TOL, seed: int = 0, samples: int = 300) -> TraceReport:
    """Test the three trace axioms.

    ``tol = 0`` asks for an exact decision, available for class functions that
    carry rational component weights over a character table.
    """
    if isinstance(phi, ClassFunctionTrace):
        return _is_trace_finite(phi, S, tol, seed, samples)
    return _is_trace_integer(phi, S, tol, seed)


def _is_trace_finite(phi: ClassFunctionTrace, S, tol, seed, samples) -> TraceReport:
    g = phi.group
    if tol == 0 and phi.components is not None:
        ws = [w for _, w in phi.components]
        return TraceReport(sum(ws) == 1, True, all(w >= 0 for w in ws),
                           float(min(ws)), "exact-components", g.order)
    eps = tol if tol > 0 else DEFAULT_TOL
    normalized = abs(phi.class_values[0] - 1) <= eps
    if S is None and g.order <= FULL_GRAM_LIMIT:
        if phi.table is not None:
            # the Gram matrix of a class function is diagonalised by the
            # isotypic decomposition: eigenvalue |G| c_i / d_i^2
            c = phi.component_weights()
            eig = (g.order * c / phi.table.degrees**2)
            mins = float(np.min(eig.real))
            herm = np.max(np.abs(eig.imag)) <= eps * g.order
            return TraceReport(bool(normalized), True, bool(herm and mins >= -eps * g.order),
                               mins, "class-spectrum", g.order)
        elems = np.arange(g.order)
        regime = "full-gram"
    elif S is None:
        elems = _sample_set(g, seed, samples)
        regime = "sampled"
    else:
        elems = np.asarray(S, dtype=np.int64)
        regime = "given-set"
    gram = gram_matrix(phi, elems, g.mul, g.inv)
    mins = _min_eig(gram)
    herm = np.max(np.abs(gram - gram.conj().T)) <= eps
    return TraceReport(bool(normalized), True, bool(herm and mins >= -eps * len(elems)),
                       mins, regime, len(elems))


def _sample_set(g: FiniteGroup, seed: int, samples: int) -> np.ndarray:
    """Random elements plus the cyclic subgroups of class representatives."""
    rng = np.random.default_rng(seed)
    pts = set(int(x) for x in rng.choice(g.order, size=min(samples, g.order), replace=False))
    pts.add(g.identity)
    for r in conjugacy_classes(g).reps:
        x = int(r)
        while x != g.identity:
            pts.add(x)
            x = int(g.mul(x, int(r)))
    return np.array(sorted(pts), dtype=np.int64)


def _min_eig(gram: np.ndarray) -> float:
    h = (gram + gram.conj().T) / 2
    return float(np.linalg.eigvalsh(h)[0])


def _is_trace_integer(phi, S, tol, seed) -> TraceReport:
    if S is None:
        raise ValueError("a finite set S is required for traces on infinite groups")
    elems = list(S)
    eps = tol if tol > 0 else DEFAULT_TOL
    ident = IntegerMatrix.of(np.eye(elems[0].dim, dtype=np.int64))
    normalized = abs(evaluate(phi, [ident])[0] - 1) <= eps
    gram = gram_matrix(phi, elems, lambda a, b: a @ b, lambda a: a.inverse())
    mins = _min_eig(gram)
    # conjugation invariance on pairs from S whose conjugate stays evaluable
    rng = np.random.default_rng(seed)
    conj_ok = True
    pairs = rng.integers(0, len(elems), size=(min(200, len(elems) ** 2), 2))
    for i, j in pairs:
        x, y = elems[i], elems[j]
        try:
            a = evaluate(phi, [x.inverse() @ y @ x])[0]
        except KeyError:
            continue
        conj_ok &= bool(abs(a - evaluate(phi, [y])[0]) <= eps)
    herm = np.max(np.abs(gram - gram.conj().T)) <= eps
    return TraceReport(bool(normalized), conj_ok, bool(herm and mins >= -eps * len(elems)),
                       mins, "given-set", len(elems))


# ---------------------------------------------------------------------------
# convex structure


def convex_combine(weights: Sequence, traces: Sequence):
    weights = list(weights)
    if len(weights) != len(traces) or not traces:
        raise ValueError("weights and traces must pair up")
    if any(w < 0 for w in weights) or abs(float(sum(weights)) - 1) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    first = traces[0]
    if isinstance(first, ClassFunctionTrace):
        if not all(isinstance(t, ClassFunctionTrace) and t.group is first.group for t in traces):
            raise TypeError("traces live on different groups or backends")
        vals = sum(float(w) * t.class_values for w, t in zip(weights, traces))
        comps = None
        exact_w = all(isinstance(w, (int, Fraction)) for w in weights)
        if exact_w and all(t.components is not None and t.table is first.table for t in traces):
            acc: dict[int, Fraction] = {}
            for w, t in zip(weights, traces):
                for i, c in t.components:
                    acc[i] = acc.get(i, Fraction(0)) + Fraction(w) * c
            comps = tuple(sorted((i, c) for i, c in acc.items() if c))
        return ClassFunctionTrace(first.group, np.asarray(vals, dtype=complex), "mixture",
                                  first.table, comps)
    if isinstance(first, PartialTrace):
        keys = [k for k in first.values if all(k in t.values for t in traces)]
        vals = {k: sum(complex(w) * t.values[k] for w, t in zip(weights, traces)) for k in keys}
        return PartialTrace(vals, max(t.tolerance for t in traces), "mixture")
    return _MixedTrace(tuple(weights), tuple(traces))


@dataclass(frozen=True)
class _MixedTrace:
    weights: tuple
    traces: tuple

    def __call__(self, gamma) -> complex:
        return sum(complex(w) * t(gamma) for w, t in zip(self.weights, self.traces))


def dominates(phi: ClassFunctionTrace, psi: ClassFunctionTrace, alpha, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``phi - alpha psi`` is positive definite on the whole group."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if phi.group is not psi.group:
        raise TypeError("traces live on different groups")
    if phi.components is not None and psi.components is not None and phi.table is psi.table \
            and isinstance(alpha, (int, Fraction)):
        diff = dict(phi.components)
        for i, c in psi.components:
            diff[i] = diff.get(i, Fraction(0)) - Fraction(alpha) * c
        return all(c >= 0 for c in diff.values())
    diff_vals = phi.class_values - float(alpha) * psi.class_values
    f = ClassFunctionTrace(phi.group, diff_vals, "", phi.table or psi.table)
    if f.table is not None:
        eig = phi.group.order * f.component_weights() / f.table.degrees**2
        return bool(np.min(eig.real) >= -tol * phi.group.order)
    gram = gram_matrix(f, np.arange(phi.group.order), phi.group.mul, phi.group.inv)
    return _min_eig(gram) >= -tol * phi.group.order


# ---------------------------------------------------------------------------
# limits


def pointwise_limit(sequence: Sequence, S: Sequence, tol: float = 1e-6, window: int = 3,
                    snap: Sequence[float] | None = None) -> PartialTrace:
    """Limit on ``S`` of a sequence of traces, judged on its last ``window`` terms.

    The tail must be Cauchy within ``tol`` on every point of S. With ``snap``,
    limit values within ``tol`` of a listed number are replaced by it (useful
    when the limit is known to take values in a small set such as {-1, 0, 1}).
    """
    if len(sequence) < window:
        raise NonConvergence(f"need at least {window} terms, got {len(sequence)}")
    S = list(S)
    vals = np.array([evaluate(t, S) for t in sequence])
    tail = vals[-window:]
    spread = np.max(np.abs(tail[:, None, :] - tail[None, :, :]), axis=(0, 1))
    worst = float(spread.max(initial=0.0))
    if worst > tol:
        bad = int(np.argmax(spread))
        raise NonConvergence(f"tail spread {worst:.3g} > {tol:g} at {S[bad].rows if hasattr(S[bad], 'rows') else S[bad]}")
    limit = tail[-1].copy()
    achieved = worst
    if snap is not None:
        targets = np.asarray(list(snap), dtype=complex)
        dist = np.abs(limit[:, None] - targets[None, :])
        near = dist.min(axis=1) <= tol
        achieved = max(worst, float(dist.min(axis=1)[near].max(initial=0.0)))
        limit[near] = targets[dist.argmin(axis=1)[near]]
    return PartialTrace({g: complex(v) for g, v in zip(S, limit)}, achieved, "limit")


# ---------------------------------------------------------------------------
# invariant random subgroups


@dataclass(frozen=True)
class InvariantRandomSubgroup:
    group: FiniteGroup
    atoms: tuple[tuple[frozenset, Fraction], ...]

    @classmethod
    def of(cls, group: FiniteGroup, atoms) -> "InvariantRandomSubgroup":
        return cls(group, tuple((frozenset(int(x) for x in h), Fraction(w)) for h, w in atoms))

    def validate(self) -> None:
        if sum(w for _, w in self.atoms) != 1 or any(w < 0 for _, w in self.atoms):
            raise ValueError("weights must be nonnegative and sum to 1")
        weight = {}
        for h, w in self.atoms:
            weight[h] = weight.get(h, Fraction(0)) + w
        g = self.group
        for h, w in weight.items():
            hs = np.array(sorted(h), dtype=np.int64)
            for s in g.generators:
                conj = frozenset(int(x) for x in np.atleast_1d(g.conj(s, hs)))
                if weight.get(conj, Fraction(0)) != w:
                    raise NotConjugationInvariant("weights are not constant on conjugation orbits")


def irs_to_trace(mu: InvariantRandomSubgroup) -> ClassFunctionTrace:
    """phi(g) = probability that a mu-random subgroup contains g."""
    mu.validate()
    g = mu.group
    vals = np.zeros(g.order)
    for h, w in mu.atoms:
        vals[np.fromiter(h, dtype=np.int64)] += float(w)
    return ClassFunctionTrace.from_element_values(g, vals, "irs")


def generated_subgroup(group: FiniteGroup, gens) -> frozenset:
    elems = {group.identity}
    frontier = [group.identity]
    gens = [int(x) for x in gens]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = int(group.mul(x, s))
                if y not in elems:
                    elems.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(elems)


def all_subgroups(group: FiniteGroup) -> list[frozenset]:
    """Every subgroup, as joins of cyclic subgroups (small groups only)."""
    if group.order > IRS_ORDER_LIMIT:
        raise ValueError(f"subgroup enumeration limited to order {IRS_ORDER_LIMIT}")
    cyclic = {generated_subgroup(group, [g]) for g in range(group.order)}
    subs = set(cyclic)
    frontier = set(cyclic)
    while frontier:
        nxt = set()
        for h, c in itertools.product(frontier, cyclic):
            if c <= h:
                continue
            j = generated_subgroup(group, sorted(h | c))
            if j not in subs:
                nxt.add(j)
        subs |= nxt
        frontier = nxt
    return sorted(subs, key=lambda h: (len(h), sorted(h)))


def conjugates(group: FiniteGroup, h: frozenset) -> list[frozenset]:
    hs = np.array(sorted(h), dtype=np.int64)
    out = {frozenset(int(x) for x in np.atleast_1d(group.conj(x, hs))) for x in range(group.order)}
    return sorted(out, key=sorted)


def uniform_on_conjugacy_class(group: FiniteGroup, h) -> InvariantRandomSubgroup:
    cl = conjugates(group, frozenset(int(x) for x in h))
    return InvariantRandomSubgroup.of(group, [(c, Fraction(1, len(cl))) for c in cl])
