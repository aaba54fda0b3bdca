"""Exact character tables by the modular class-matrix (Dixon-Schneider) method."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cyclotomic import CyclotomicValue, exact_sum_of_products, reduce_mod_cyclotomic
from .groups import BudgetExceeded, FiniteGroup, conjugacy_classes

FORMAT_VERSION = 1
DEFAULT_CLASS_BUDGET = 200


class SplittingFailure(RuntimeError):
    """Class matrices did not separate all characters modulo the chosen prime."""


# ---------------------------------------------------------------------------
# structure constants


def class_matrices(group: FiniteGroup, classes=None) -> np.ndarray:
    """Structure constants as an array ``M[j, i, l] = a_{jil}``.

    ``a_{jil} = #{(x, y) in C_j x C_i : xy = z_l}`` for a fixed z_l in C_l, so
    that each ``M[j]`` acts on central characters by ``M[j] @ w = w[j] * w``.
    """
    cls = conjugacy_classes(group) if classes is None else classes
    k = cls.count
    out = np.zeros((k, k, k), dtype=np.int64)
    allx = np.arange(group.order)
    inv_all = group.inv(allx)
    cx = cls.class_of
    for l, z in enumerate(cls.reps):
        # y = x^-1 z for every x
        if group._table is not None:
            y = group._table[inv_all, z]
        else:
            y = group.times_all(int(z), left=False)[inv_all]
        cy = cls.class_of[y]
        counts = np.bincount(cx * k + cy, minlength=k * k).reshape(k, k)
        out[:, :, l] = counts
    return out


# ---------------------------------------------------------------------------
# arithmetic modulo a prime


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def admissible_primes(exponent: int, order: int):
    """Primes l = 1 (mod exponent) with l > 2 sqrt(order), increasing."""
    lo = 2 * math.isqrt(order) + 2
    t = max(1, (lo - 1) // exponent)
    while True:
        cand = t * exponent + 1
        if cand > 2 * math.sqrt(order) and is_prime(cand):
            yield cand
        t += 1


def primitive_root(p: int) -> int:
    if p == 2:
        return 1
    phi = p - 1
    factors = [q for q in range(2, phi + 1) if phi % q == 0 and is_prime(q)]
    for g in range(2, p):
        if all(pow(g, phi // q, p) != 1 for q in factors):
            return g
    raise ArithmeticError("no primitive root")


def _matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if p < 2**20:
        return (a @ b) % p
    return np.array((a.astype(object) @ b.astype(object)) % p, dtype=np.int64)


def nullspace_mod(a: np.ndarray, p: int) -> np.ndarray:
    """Basis (columns) of the right null space of ``a`` over F_p."""
    a = np.array(a, dtype=np.int64) % p
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if not len(nz):
            continue
        piv = r + nz[0]
        a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        if len(others):
            a[others] = (a[others] - a[others, c][:, None] * a[r][None, :]) % p
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for t, f in enumerate(free):
        basis[f, t] = 1
        for i, pc in enumerate(pivots):
            basis[pc, t] = (-a[i, f]) % p
    return basis


def _solve_square_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    n = a.shape[0]
    aug = np.concatenate([a % p, b % p], axis=1).astype(np.int64)
    for c in range(n):
        nz = np.flatnonzero(aug[c:, c])
        if not len(nz):
            raise ArithmeticError("singular system mod p")
        piv = c + nz[0]
        aug[[c, piv]] = aug[[piv, c]]
        aug[c] = aug[c] * pow(int(aug[c, c]), -1, p) % p
        others = np.flatnonzero(aug[:, c])
        others = others[others != c]
        if len(others):
            aug[others] = (aug[others] - aug[others, c][:, None] * aug[c][None, :]) % p
    return aug[:, n:]


def _independent_rows(b: np.ndarray, p: int) -> list[int]:
    a = b.T.copy() % p  # columns of a = rows of b
    rows, cols = a.shape
    piv, r = [], 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if not len(nz):
            continue
        k = r + nz[0]
        a[[r, k]] = a[[k, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        if len(others):
            a[others] = (a[others] - a[others, c][:, None] * a[r][None, :]) % p
        piv.append(c)
        r += 1
    return piv


def charpoly_mod(a: np.ndarray, p: int) -> np.ndarray:
    """Characteristic polynomial (highest degree first) via Hessenberg reduction.

    Valid for any prime, including p <= n where Faddeev-LeVerrier divides by zero.
    """
    h = [[int(x) % p for x in row] for row in np.asarray(a)]
    n = len(h)
    for j in range(n - 2):
        piv = next((i for i in range(j + 1, n) if h[i][j]), None)
        if piv is None:
            continue
        if piv != j + 1:
            h[piv], h[j + 1] = h[j + 1], h[piv]
            for row in h:
                row[piv], row[j + 1] = row[j + 1], row[piv]
        inv = pow(h[j + 1][j], -1, p)
        for k in range(j + 2, n):
            u = h[k][j] * inv % p
            if not u:
                continue
            h[k] = [(x - u * y) % p for x, y in zip(h[k], h[j + 1])]
            for row in h:
                row[j + 1] = (row[j + 1] + u * row[k]) % p
    # polys stored lowest degree first
    polys = [[1]]
    for m in range(n):
        nxt = [0] + polys[m]
        for t, c in enumerate(polys[m]):
            nxt[t] = (nxt[t] - h[m][m] * c) % p
        prod = 1
        for i in range(1, m + 1):
            prod = prod * h[m - i + 1][m - i] % p
            if not prod:
                break
            coef = h[m - i][m] * prod % p
            for t, c in enumerate(polys[m - i]):
                nxt[t] = (nxt[t] - coef * c) % p
        polys.append(nxt)
    return np.array(polys[n][::-1], dtype=np.int64)


def roots_mod(poly: np.ndarray, p: int) -> list[int]:
    x = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in poly:
        acc = (acc * x + int(c)) % p
    return [int(r) for r in np.flatnonzero(acc == 0)]


def common_eigenvectors_mod(mats: np.ndarray, p: int) -> list[np.ndarray]:
    """Split F_p^k into common eigenlines of the commuting matrices ``mats``.

    Matrices are tried in index order; if some eigenspace is still not a line
    after all of them, SplittingFailure is raised.
    """
    k = mats.shape[1]
    spaces = [np.eye(k, dtype=np.int64)]
    for m in mats:
        if all(s.shape[1] == 1 for s in spaces):
            break
        nxt = []
        for b in spaces:
            r = b.shape[1]
            if r == 1:
                nxt.append(b)
                continue
            mb = _matmul_mod(m % p, b, p)
            rows = _independent_rows(b, p)
            a = _solve_square_mod(b[rows], mb[rows], p)
            lams = roots_mod(charpoly_mod(a, p), p)
            got = 0
            for lam in lams:
                ns = nullspace_mod((a - lam * np.eye(r, dtype=np.int64)) % p, p)
                if ns.shape[1]:
                    nxt.append(_matmul_mod(b, ns, p))
                    got += ns.shape[1]
            if got != r:
                raise SplittingFailure("class matrix not diagonalisable over F_p")
        spaces = nxt
    if any(s.shape[1] != 1 for s in spaces):
        raise SplittingFailure("eigenspaces not separated by class matrices")
    return [s[:, 0] for s in spaces]


# ---------------------------------------------------------------------------
# the table


@dataclass
class CharacterTable:
    descriptor: str
    order: int
    exponent: int
    class_sizes: np.ndarray
    class_reps: list  # encodings (matrices as nested lists, or indices)
    class_orders: np.ndarray
    inverse_class: np.ndarray
    degrees: np.ndarray
    values: list[list[CyclotomicValue]]
    prime: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.class_sizes)

    @cached_property
    def numeric(self) -> np.ndarray:
        return np.array([[complex(v) for v in row] for row in self.values])

    def normalized(self, i: int) -> np.ndarray:
        return self.numeric[i] / self.degrees[i]

    def kernel_classes(self, i: int) -> np.ndarray:
        d = int(self.degrees[i])
        return np.array([j for j, v in enumerate(self.values[i]) if v == d])

    def is_faithful(self, i: int) -> bool:
        """Faithful iff chi(g) = chi(e) only on the identity class."""
        ker = self.kernel_classes(i)
        return int(self.class_sizes[ker].sum()) == 1

    def linear_rows(self) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if d == 1]

    # -- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "descriptor": self.descriptor,
            "order": int(self.order),
            "exponent": int(self.exponent),
            "prime": int(self.prime),
            "class_sizes": [int(x) for x in self.class_sizes],
            "class_orders": [int(x) for x in self.class_orders],
            "inverse_class": [int(x) for x in self.inverse_class],
            "class_reps": self.class_reps,
            "degrees": [int(x) for x in self.degrees],
            "values": [[[[int(j), int(c)] for j, c in v.terms] for v in row] for row in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterTable":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError("character table format version mismatch")
        e = int(d["exponent"])
        values = [[CyclotomicValue(e, tuple((int(j), int(c)) for j, c in v)) for v in row]
                  for row in d["values"]]
        return cls(
            descriptor=d["descriptor"], order=int(d["order"]), exponent=e,
            class_sizes=np.array(d["class_sizes"], dtype=np.int64),
            class_reps=d["class_reps"],
            class_orders=np.array(d["class_orders"], dtype=np.int64),
            inverse_class=np.array(d["inverse_class"], dtype=np.int64),
            degrees=np.array(d["degrees"], dtype=np.int64),
            values=values, prime=int(d.get("prime", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "CharacterTable":
        return cls.from_dict(json.loads(text))

    def same_values(self, other: "CharacterTable") -> bool:
        return (self.k == other.k and np.array_equal(self.degrees, other.degrees)
                and all(a.terms == b.terms for ra, rb in zip(self.values, other.values)
                        for a, b in zip(ra, rb)))


def _power_classes(group: FiniteGroup, cls, orders: np.ndarray) -> list[np.ndarray]:
    """class of g_j^t for t < ord(g_j), for every class representative g_j."""
    reps = cls.reps
    omax = int(orders.max())
    cur = np.zeros(len(reps), dtype=np.int64)  # identity
    powers = np.zeros((len(reps), omax), dtype=np.int64)
    for t in range(omax):
        powers[:, t] = cls.class_of[cur]
        cur = np.atleast_1d(group.mul(cur, reps))
    return [powers[j, :orders[j]] for j in range(len(reps))]


def _element_orders(group: FiniteGroup, reps: np.ndarray) -> np.ndarray:
    orders = np.zeros(len(reps), dtype=np.int64)
    cur = np.array(reps, dtype=np.int64)
    t = 1
    while np.any(orders == 0):
        done = (cur == group.identity) & (orders == 0)
        orders[done] = t
        cur = np.atleast_1d(group.mul(cur, reps))
        t += 1
    return orders


def _rep_encoding(group: FiniteGroup, i: int):
    if group.mats is None:
        return int(i)
    return group.mats[i].tolist()


def character_table(
    group: FiniteGroup,
    class_budget: int = DEFAULT_CLASS_BUDGET,
    max_primes: int = 5,
    prime: int | None = None,
) -> CharacterTable:
    """Exact character table of ``group``.

    Rows are sorted by degree, trivial character first, then by the
    multiplicity vectors of the values; columns follow the class order of
    :func:`conjugacy_classes`.
    """
    cls = conjugacy_classes(group)
    k = cls.count
    if k > class_budget:
        raise BudgetExceeded(f"{group.descriptor}: {k} classes exceed budget {class_budget}")
    n = group.order
    orders = _element_orders(group, cls.reps)
    e = math.lcm(*[int(o) for o in orders])
    mats = class_matrices(group, cls)
    powers = _power_classes(group, cls, orders)

    primes = [prime] if prime is not None else []
    if prime is None:
        gen = admissible_primes(e, n)
        primes = [next(gen) for _ in range(max_primes)]
    last_err: Exception | None = None
    for ell in primes:
        try:
            rows = _dixon_rows(mats, cls, orders, powers, e, n, ell)
        except SplittingFailure as err:
            last_err = err
            continue
        break
    else:
        raise SplittingFailure(f"all primes failed for {group.descriptor}: {last_err}")

    rows.sort(key=lambda r: (r[0], any(v.terms != ((0, 1),) for v in r[1]),
                             [v.terms for v in r[1]]))
    return CharacterTable(
        descriptor=group.descriptor, order=n, exponent=e,
        class_sizes=cls.sizes.copy(),
        class_reps=[_rep_encoding(group, int(r)) for r in cls.reps],
        class_orders=orders, inverse_class=np.asarray(cls.inverse_class).copy(),
        degrees=np.array([r[0] for r in rows], dtype=np.int64),
        values=[r[1] for r in rows], prime=ell,
    )


def _dixon_rows(mats, cls, orders, powers, e, n, ell):
    k = cls.count
    sizes = cls.sizes
    size_inv = np.array([pow(int(s), -1, ell) for s in sizes], dtype=np.int64)
    vecs = common_eigenvectors_mod(mats[1:] if k > 1 else mats, ell)
    if len(vecs) != k:
        raise SplittingFailure("wrong number of eigenlines")
    z = pow(primitive_root(ell), (ell - 1) // e, ell)
    rows = []
    for w in vecs:
        w = w * pow(int(w[0]), -1, ell) % ell  # omega(identity class) = 1
        s = int(np.sum(w * w[cls.inverse_class] % ell * size_inv % ell) % ell)
        d2 = n * pow(s, -1, ell) % ell
        d = next((d for d in range(1, math.isqrt(n) + 1) if d * d % ell == d2), None)
        if d is None:
            raise SplittingFailure("no integral degree")
        chi = d * w % ell * size_inv % ell
        values = []
        for j in range(k):
            o = int(orders[j])
            zo = pow(z, e // o, ell)
            seq = chi[powers[j]]
            terms = {}
            total = 0
            o_inv = pow(o, -1, ell)
            for sidx in range(o):
                roots = _pow_table(zo, -sidx, o, ell)
                m = int(np.sum(seq * roots % ell) % ell) * o_inv % ell
                if m > d:
                    raise SplittingFailure("multiplicity out of range")
                if m:
                    terms[sidx * (e // o)] = m
                    total += m
            if total != d:
                raise SplittingFailure("multiplicities do not sum to the degree")
            values.append(CyclotomicValue.from_dict(e, terms))
        rows.append((d, values))
    return rows


def _pow_table(base: int, step: int, o: int, p: int) -> np.ndarray:
    out = np.empty(o, dtype=np.int64)
    g = pow(base, step % o, p) if step % o else 1
    acc = 1
    for i in range(o):
        out[i] = acc
        acc = acc * g % p
    return out


# ---------------------------------------------------------------------------
# exact checks


def _is_integer_multiple(acc: np.ndarray, e: int, target: int) -> bool:
    can = reduce_mod_cyclotomic(acc, e)
    return can[0] == target and not any(can[1:])


def row_orthogonality_exact(table: CharacterTable) -> bool:
    e, k = table.exponent, table.k
    for i in range(k):
        for l in range(i, k):
            acc = exact_sum_of_products(table.values[i], table.values[l], table.class_sizes, e)
            if not _is_integer_multiple(acc, e, table.order if i == l else 0):
                return False
    return True


def column_orthogonality_exact(table: CharacterTable) -> bool:
    e, k = table.exponent, table.k
    cols = [[table.values[i][j] for i in range(k)] for j in range(k)]
    ones = [1] * k
    for j in range(k):
        for l in range(j, k):
            acc = exact_sum_of_products(cols[j], cols[l], ones, e)
            target = table.order // int(table.class_sizes[j]) if j == l else 0
            if not _is_integer_multiple(acc, e, target):
                return False
    return True


def sum_of_squared_degrees(table: CharacterTable) -> int:
    return int(sum(int(d) ** 2 for d in table.degrees))


def normalized_character(table: CharacterTable, i: int, group: FiniteGroup | None = None):
    """The trace chi_i / chi_i(e) as a class-function trace."""
    from .traces import ClassFunctionTrace

    return ClassFunctionTrace.from_table_row(table, i, group)
