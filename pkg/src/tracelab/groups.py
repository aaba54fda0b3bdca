"""Finite groups given by generators (matrices over Z/m or an explicit table).

Elements are indexed 0..|G|-1 in BFS insertion order from the identity with a
fixed generator order, so indices are reproducible.  Matrix groups keep the
reduced matrices so that integer matrices can be reduced into them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_ORDER_BUDGET = 500_000
TABLE_THRESHOLD = 2048


class BudgetExceeded(RuntimeError):
    """The requested instance is beyond the configured size budget."""


class NonInvertibleGenerator(ValueError):
    pass


class NotInGroup(ValueError):
    pass


@dataclass(frozen=True)
class Descriptor:
    family: str
    params: tuple[int, ...] = ()

    def __str__(self) -> str:
        if not self.params:
            return self.family
        return f"{self.family}({','.join(map(str, self.params))})"


_DESC_RE = re.compile(r"^\s*([a-z][a-z0-9_]*)\s*(?:\(([^)]*)\))?\s*$")
_ARITY = {"sl": 2, "aff": 2, "vec": 2, "cyclic": 1, "q8": 0}


def parse_descriptor(text: str | Descriptor) -> Descriptor:
    """Parse ``sl(2,13)``, ``aff(2,3)``, ``vec(2,3)``, ``cyclic(12)`` or ``q8``."""
    if isinstance(text, Descriptor):
        return text
    m = _DESC_RE.match(text.lower())
    if not m:
        raise ValueError(f"malformed group descriptor {text!r}")
    family, args = m.group(1), m.group(2)
    if family not in _ARITY:
        raise ValueError(f"unknown group family {family!r}")
    params = tuple(int(a) for a in args.split(",")) if args and args.strip() else ()
    if len(params) != _ARITY[family]:
        raise ValueError(f"{family} takes {_ARITY[family]} parameters, got {params}")
    if family in ("sl", "aff", "vec") and (params[0] < 1 or params[1] < 2):
        raise ValueError(f"bad parameters in {text!r}")
    if family == "cyclic" and params[0] < 1:
        raise ValueError(f"bad parameters in {text!r}")
    return Descriptor(family, params)


def elementary(n: int, i: int, j: int, t: int = 1) -> np.ndarray:
    e = np.eye(n, dtype=np.int64)
    e[i, j] = t
    return e


def _int_det(a: Sequence[Sequence[int]]) -> int:
    n = len(a)
    if n == 1:
        return int(a[0][0])
    if n == 2:
        return int(a[0][0]) * int(a[1][1]) - int(a[0][1]) * int(a[1][0])
    total = 0
    for j in range(n):
        if a[0][j]:
            minor = [row[:j] + row[j + 1:] for row in a[1:]]
            total += (-1) ** j * int(a[0][j]) * _int_det(minor)
    return total


def int_adjugate(a: Sequence[Sequence[int]]) -> list[list[int]]:
    a = [[int(x) for x in row] for row in a]
    n = len(a)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(a) if k != i]
            adj[j][i] = (-1) ** (i + j) * _int_det(minor)
    return adj


def _batch_adjugate(mats: np.ndarray) -> np.ndarray:
    """Adjugates of a stack of small integer matrices (exact via cofactors)."""
    n = mats.shape[-1]
    if n == 1:
        return np.ones_like(mats)
    if n == 2:
        out = np.empty_like(mats)
        out[:, 0, 0] = mats[:, 1, 1]
        out[:, 1, 1] = mats[:, 0, 0]
        out[:, 0, 1] = -mats[:, 0, 1]
        out[:, 1, 0] = -mats[:, 1, 0]
        return out
    out = np.empty_like(mats)
    idx = np.arange(n)
    for i in range(n):
        for j in range(n):
            minor = mats[:, idx != i][:, :, idx != j]
            out[:, j, i] = (-1) ** (i + j) * _batch_det(minor)
    return out


def _batch_det(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[-1]
    if n == 1:
        return mats[:, 0, 0].copy()
    if n == 2:
        return mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    total = np.zeros(mats.shape[0], dtype=np.int64)
    idx = np.arange(n)
    for j in range(n):
        minor = mats[:, 1:][:, :, idx != j]
        total += (-1) ** j * mats[:, 0, j] * _batch_det(minor)
    return total


class FiniteGroup:
    """A fully enumerated finite group.

    Matrix groups store ``mats`` (shape ``(N, n, n)``, entries in ``[0, m)``);
    table groups store only the multiplication table.  ``mul`` and ``inv``
    accept scalars or integer arrays.
    """

    def __init__(
        self,
        descriptor: str,
        generators: Sequence[int],
        *,
        mats: np.ndarray | None = None,
        modulus: int | None = None,
        table: np.ndarray | None = None,
    ):
        self.descriptor = descriptor
        self.generators = list(generators)
        self.mats = mats
        self.modulus = modulus
        self.identity = 0
        if mats is not None:
            n = mats.shape[1]
            self.dim = n
            self._radix = modulus ** np.arange(n * n, dtype=np.int64)[::-1]
            keys = self._encode(mats)
            self._order_idx = np.argsort(keys, kind="stable")
            self._sorted_keys = keys[self._order_idx]
            self._table = None
            if len(mats) <= TABLE_THRESHOLD:
                self._table = self._compute_table()
            adj = _batch_adjugate(mats)
            dets = _batch_det(mats) % modulus
            dinv = np.array([pow(int(d), -1, modulus) for d in dets], dtype=np.int64)
            inv_mats = (adj % modulus) * dinv[:, None, None] % modulus
            self.inv_table = self.index_of(inv_mats)
        else:
            if table is None:
                raise ValueError("either mats or table is required")
            self.dim = 0
            self._table = np.asarray(table, dtype=np.int64)
            ident = self._table[0]
            if not np.array_equal(ident, np.arange(len(ident))):
                raise ValueError("element 0 must be the identity of the table")
            rows, cols = np.nonzero(self._table == 0)
            inv = np.empty(len(ident), dtype=np.int64)
            inv[rows] = cols
            self.inv_table = inv

    # -- encoding -----------------------------------------------------------
    def _encode(self, mats: np.ndarray) -> np.ndarray:
        flat = mats.reshape(mats.shape[0], -1).astype(np.int64)
        return flat @ self._radix

    def index_of(self, mats: np.ndarray) -> np.ndarray:
        """Indices of reduced matrices; raises NotInGroup for foreign ones."""
        mats = np.asarray(mats, dtype=np.int64) % self.modulus
        single = mats.ndim == 2
        if single:
            mats = mats[None]
        keys = self._encode(mats)
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, len(self._sorted_keys) - 1)
        if not np.array_equal(self._sorted_keys[pos], keys):
            raise NotInGroup(f"matrix not in {self.descriptor}")
        out = self._order_idx[pos]
        return int(out[0]) if single else out

    def encode(self, i: int) -> bytes:
        if self.mats is None:
            return int(i).to_bytes(4, "big")
        return self.mats[i].astype(np.uint8 if self.modulus <= 256 else np.int64).tobytes()

    def decode(self, b: bytes) -> int:
        if self.mats is None:
            return int.from_bytes(b, "big")
        dt = np.uint8 if self.modulus <= 256 else np.int64
        m = np.frombuffer(b, dtype=dt).astype(np.int64).reshape(self.dim, self.dim)
        return self.index_of(m)

    # -- group operations ---------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.inv_table)

    def __len__(self) -> int:
        return self.order

    def _compute_table(self) -> np.ndarray:
        m = self.mats
        n = len(m)
        table = np.empty((n, n), dtype=np.int64)
        step = max(1, 200_000 // n)
        for start in range(0, n, step):
            block = np.matmul(m[start:start + step, None], m[None]) % self.modulus
            table[start:start + step] = self.index_of(
                block.reshape(-1, self.dim, self.dim)).reshape(-1, n)
        return table

    def mul(self, a, b):
        if self._table is not None:
            return self._table[a, b]
        a_arr, b_arr = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        prod = np.matmul(self.mats[a_arr.ravel()], self.mats[b_arr.ravel()]) % self.modulus
        out = self.index_of(prod).reshape(a_arr.shape)
        return int(out) if out.ndim == 0 else out

    def inv(self, a):
        out = self.inv_table[a]
        return int(out) if np.ndim(out) == 0 else out

    def conj(self, x, g):
        """``x g x^-1``."""
        return self.mul(self.mul(x, g), self.inv(x))

    def times_all(self, g: int, left: bool = True) -> np.ndarray:
        """``g*x`` (or ``x*g``) for every element x, as an index array."""
        allx = np.arange(self.order)
        if self._table is not None:
            return self._table[g, allx] if left else self._table[allx, g]
        if left:
            prod = np.matmul(self.mats[g][None], self.mats) % self.modulus
        else:
            prod = np.matmul(self.mats, self.mats[g][None]) % self.modulus
        return self.index_of(prod)

    def element(self, i: int) -> np.ndarray:
        if self.mats is None:
            raise TypeError("table group has no matrix encoding")
        return self.mats[i].copy()

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.mul(x, g)
            k += 1
        return k

    @cached_property
    def exponent(self) -> int:
        cls = conjugacy_classes(self)
        return math.lcm(*(self.element_order(int(r)) for r in cls.reps))

    def is_abelian(self) -> bool:
        gens = self.generators
        return all(self.mul(a, b) == self.mul(b, a) for a in gens for b in gens)

    @classmethod
    def from_table(cls, table, descriptor: str = "table", generators=None) -> "FiniteGroup":
        table = np.asarray(table, dtype=np.int64)
        gens = list(range(1, len(table))) if generators is None else list(generators)
        return cls(descriptor, gens, table=table)

    def __repr__(self) -> str:
        return f"FiniteGroup({self.descriptor!r}, order={self.order})"


def matrix_group(
    generators: Sequence[np.ndarray],
    modulus: int,
    descriptor: str = "matrix",
    budget: int = DEFAULT_ORDER_BUDGET,
) -> FiniteGroup:
    """Enumerate the group generated by integer matrices modulo ``modulus``."""
    gens = [np.asarray(g, dtype=np.int64) % modulus for g in generators]
    n = gens[0].shape[0]
    for g in gens:
        det = _int_det(g.tolist()) % modulus
        if math.gcd(det, modulus) != 1:
            raise NonInvertibleGenerator(f"generator with det {det} mod {modulus}")
    gen_stack = np.stack(gens)
    radix = modulus ** np.arange(n * n, dtype=np.int64)[::-1]
    if modulus ** (n * n) >= 2**62:
        raise BudgetExceeded("matrix encoding exceeds 62 bits")

    ident = np.eye(n, dtype=np.int64) % modulus
    elems = [ident[None]]
    seen = {int(ident.reshape(-1) @ radix)}
    layer = ident[None]
    count = 1
    while len(layer):
        cand = np.matmul(gen_stack[None, :, :, :], layer[:, None, :, :]) % modulus
        cand = cand.reshape(-1, n, n)
        keys = cand.reshape(len(cand), -1) @ radix
        _, first = np.unique(keys, return_index=True)
        first.sort()
        fresh = [i for i in first if int(keys[i]) not in seen]
        if not fresh:
            break
        count += len(fresh)
        if count > budget:
            raise BudgetExceeded(f"{descriptor}: order exceeds budget {budget}")
        seen.update(int(keys[i]) for i in fresh)
        layer = cand[fresh]
        elems.append(layer)
    mats = np.concatenate(elems)
    group = FiniteGroup(descriptor, [], mats=mats, modulus=modulus)
    group.generators = [group.index_of(g) for g in gens]
    return group


def _sl_generators(d: int) -> list[np.ndarray]:
    if d == 1:
        return [np.eye(1, dtype=np.int64)]
    return [elementary(d, i, j) for i in range(d) for j in range(d) if i != j]


def sl_order(d: int, m: int) -> int:
    """|SL_d(Z/m)| from the prime factorisation of m."""
    order = 1
    for p, k in _factor(m).items():
        q = p
        o = q ** ((k - 1) * (d * d - 1))
        prod = 1
        for i in range(2, d + 1):
            prod *= q**i - 1
        o *= q ** (d * (d - 1) // 2) * prod
        order *= o
    return order


def _factor(m: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= m:
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
        p += 1
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


def expected_order(desc: Descriptor) -> int:
    f, ps = desc.family, desc.params
    if f == "sl":
        return sl_order(*ps)
    if f == "aff":
        return sl_order(*ps) * ps[1] ** ps[0]
    if f == "vec":
        return ps[1] ** ps[0]
    if f == "cyclic":
        return ps[0]
    return 8


def build_group(descriptor: str | Descriptor, budget: int = DEFAULT_ORDER_BUDGET) -> FiniteGroup:
    """Build a group from its descriptor, refusing instances beyond ``budget``."""
    desc = parse_descriptor(descriptor)
    if expected_order(desc) > budget:
        raise BudgetExceeded(f"{desc}: order {expected_order(desc)} exceeds budget {budget}")
    f, ps = desc.family, desc.params
    if f == "sl":
        d, m = ps
        gens = _sl_generators(d)
        return matrix_group(gens, m, str(desc), budget)
    if f in ("aff", "vec"):
        d, p = ps
        gens = []
        if f == "aff":
            for g in _sl_generators(d):
                a = np.eye(d + 1, dtype=np.int64)
                a[:d, :d] = g
                gens.append(a)
        for i in range(d):
            gens.append(elementary(d + 1, i, d))
        return matrix_group(gens, p, str(desc), budget)
    if f == "cyclic":
        (n,) = ps
        if n == 1:
            return FiniteGroup.from_table([[0]], str(desc), generators=[0])
        return matrix_group([elementary(2, 0, 1)], n, str(desc), budget)
    # quaternion group inside SL(2, 3)
    i = np.array([[0, 2], [1, 0]])
    j = np.array([[1, 1], [1, 2]])
    return matrix_group([i, j], 3, str(desc), budget)


# ---------------------------------------------------------------------------
# conjugacy classes


@dataclass
class ConjClassTable:
    class_of: np.ndarray
    sizes: np.ndarray
    reps: np.ndarray
    inverse_class: np.ndarray

    @property
    def count(self) -> int:
        return len(self.sizes)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.class_of == j)


_CLASS_CACHE: dict[int, ConjClassTable] = {}


def conjugacy_classes(group: FiniteGroup) -> ConjClassTable:
    """Orbit partition under conjugation; representatives are least indices."""
    cached = getattr(group, "_classes", None)
    if cached is not None:
        return cached
    n = group.order
    class_of = np.full(n, -1, dtype=np.int64)
    gens = list(group.generators)
    gen_inv = [group.inv(s) for s in gens]
    reps, sizes = [], []
    k = 0
    for g in range(n):
        if class_of[g] >= 0:
            continue
        class_of[g] = k
        frontier = np.array([g])
        size = 1
        while len(frontier):
            new = []
            for s, si in zip(gens, gen_inv):
                c = group.mul(group.mul(np.full(len(frontier), s), frontier), si)
                c = np.unique(np.atleast_1d(c))
                c = c[class_of[c] < 0]
                class_of[c] = k
                size += len(c)
                new.append(c)
            frontier = np.unique(np.concatenate(new)) if new else np.array([], dtype=np.int64)
        reps.append(g)
        sizes.append(size)
        k += 1
    reps_arr = np.array(reps, dtype=np.int64)
    inverse_class = class_of[group.inv(reps_arr)]
    table = ConjClassTable(class_of, np.array(sizes, dtype=np.int64), reps_arr, np.asarray(inverse_class))
    group._classes = table
    return table


def center(group: FiniteGroup) -> np.ndarray:
    cls = conjugacy_classes(group)
    return np.sort(cls.reps[cls.sizes == 1])


# ---------------------------------------------------------------------------
# integer matrices and reduction


@dataclass(frozen=True)
class IntegerMatrix:
    """Square integer matrix of determinant 1 (or +-1 with ``allow_gl``).

    Affine pairs (A, v) of GL_d(Z) x| Z^d are stored as the block matrix
    [[A, v], [0, 1]].
    """

    rows: tuple[tuple[int, ...], ...]
    allow_gl: bool = field(default=False, compare=False)

    def __post_init__(self):
        det = _int_det(self.rows)
        ok = det in (1, -1) if self.allow_gl else det == 1
        if not ok:
            raise ValueError(f"determinant {det} not allowed for {self.rows}")

    @classmethod
    def of(cls, a, allow_gl: bool = False) -> "IntegerMatrix":
        return cls(tuple(tuple(int(x) for x in row) for row in np.asarray(a).tolist()), allow_gl)

    @classmethod
    def affine(cls, a, v) -> "IntegerMatrix":
        a = np.asarray(a, dtype=np.int64)
        d = a.shape[0]
        m = np.eye(d + 1, dtype=np.int64)
        m[:d, :d] = a
        m[:d, d] = np.asarray(v, dtype=np.int64)
        return cls.of(m, allow_gl=True)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=object)

    def __matmul__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        n = self.dim
        rows = tuple(
            tuple(sum(self.rows[i][k] * other.rows[k][j] for k in range(n)) for j in range(n))
            for i in range(n)
        )
        return IntegerMatrix(rows, self.allow_gl or other.allow_gl)

    def inverse(self) -> "IntegerMatrix":
        det = _int_det(self.rows)
        adj = int_adjugate(self.rows)
        return IntegerMatrix(tuple(tuple(det * x for x in row) for row in adj), self.allow_gl)

    def is_central(self) -> bool:
        n = self.dim
        c = self.rows[0][0]
        return all(self.rows[i][j] == (c if i == j else 0) for i in range(n) for j in range(n))

    def max_abs(self) -> int:
        return max(abs(x) for row in self.rows for x in row)

    def flat(self) -> list[int]:
        return [x for row in self.rows for x in row]


def reduce(gamma: IntegerMatrix, group: FiniteGroup) -> int:
    """Index of the entry-wise reduction of ``gamma`` in a matrix group mod m."""
    if group.mats is None:
        raise TypeError("reduction needs a matrix group")
    if gamma.dim != group.dim:
        raise NotInGroup(f"dimension {gamma.dim} does not match {group.descriptor}")
    m = group.modulus
    red = np.array([[x % m for x in row] for row in gamma.rows], dtype=np.int64)
    return group.index_of(red)


def reduce_many(gammas: Sequence[IntegerMatrix], group: FiniteGroup) -> np.ndarray:
    m = group.modulus
    red = np.array([[[x % m for x in row] for row in g.rows] for g in gammas], dtype=np.int64)
    return group.index_of(red)


class IntegerMatrixGroup:
    """SL_d(Z) (or an affine group over Z) used as the ambient of pulled-back traces."""

    def __init__(self, d: int, affine: bool = False):
        self.d = d
        self.affine = affine
        n = d + 1 if affine else d
        self.identity = IntegerMatrix.of(np.eye(n, dtype=np.int64), allow_gl=affine)

    def mul(self, x: IntegerMatrix, y: IntegerMatrix) -> IntegerMatrix:
        return x @ y

    def inv(self, x: IntegerMatrix) -> IntegerMatrix:
        return x.inverse()

    def elementary_generators(self, symmetric: bool = True) -> list[IntegerMatrix]:
        d = self.d
        out = []
        for i in range(d):
            for j in range(d):
                if i != j:
                    out.append(IntegerMatrix.of(elementary(d, i, j, 1)))
                    if symmetric:
                        out.append(IntegerMatrix.of(elementary(d, i, j, -1)))
        return out


def word_ball(generators: Sequence[IntegerMatrix], radius: int) -> list[IntegerMatrix]:
    """Elements of word length <= radius, in BFS order (identity first)."""
    ident = IntegerMatrix.of(np.eye(generators[0].dim, dtype=np.int64))
    ball = [ident]
    seen = {ident}
    layer = [ident]
    for _ in range(radius):
        nxt = []
        for x in layer:
            for s in generators:
                y = s @ x
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        ball.extend(nxt)
        layer = nxt
    return ball


def check_group_axioms(group: FiniteGroup, samples: int = 1000, seed: int = 0) -> bool:
    """Associativity and inverses, exhaustive for tiny groups, sampled otherwise."""
    n = group.order
    rng = np.random.default_rng(seed)
    if n**3 <= samples:
        x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        x, y, z = x.ravel(), y.ravel(), z.ravel()
    else:
        x, y, z = (rng.integers(0, n, samples) for _ in range(3))
    assoc = np.array_equal(group.mul(group.mul(x, y), z), group.mul(x, group.mul(y, z)))
    allx = np.arange(n)
    invs = np.all(group.mul(allx, group.inv(allx)) == 0) and np.all(group.mul(group.inv(allx), allx) == 0)
    return bool(assoc and invs)


def cyclic_table(n: int) -> np.ndarray:
    a = np.arange(n)
    return (a[:, None] + a[None, :]) % n


def iter_descriptors(items: Iterable[str]) -> list[Descriptor]:
    return [parse_descriptor(s) for s in items]
