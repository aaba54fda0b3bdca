"""Exact elements of Z[zeta_e] stored as sparse integer coefficient vectors."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, lowest degree first."""
    # x^n - 1 divided by Phi_d for every proper divisor d
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _poly_div_exact(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _poly_div_exact(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    dd = len(den) - 1
    q = [0] * (len(num) - dd)
    for k in range(len(num) - 1, dd - 1, -1):
        c = num[k]  # den is monic
        q[k - dd] = c
        if c:
            for i in range(dd + 1):
                num[k - dd + i] -= c * den[i]
    if any(num[:dd]):
        raise ArithmeticError("inexact polynomial division")
    return q


def reduce_mod_cyclotomic(coeffs: np.ndarray, n: int) -> tuple[int, ...]:
    """Canonical form of sum c_j zeta_n^j: remainder modulo Phi_n."""
    phi = np.array(cyclotomic_polynomial(n), dtype=object)
    deg = len(phi) - 1
    r = np.array([int(c) for c in coeffs], dtype=object)
    if len(r) < deg:
        r = np.concatenate([r, np.zeros(deg - len(r), dtype=object)])
    for k in range(len(r) - 1, deg - 1, -1):
        c = r[k]
        if c:
            r[k - deg:k + 1] -= c * phi
    return tuple(int(x) for x in r[:deg])


@dataclass(frozen=True)
class CyclotomicValue:
    """``sum_j m_j zeta_order^j`` with integer m_j (sparse, exponents in [0, order))."""

    order: int
    terms: tuple[tuple[int, int], ...]

    @classmethod
    def from_dict(cls, order: int, coeffs: dict[int, int]) -> "CyclotomicValue":
        acc: dict[int, int] = {}
        for j, c in coeffs.items():
            j %= order
            acc[j] = acc.get(j, 0) + int(c)
        return cls(order, tuple(sorted((j, c) for j, c in acc.items() if c)))

    @classmethod
    def integer(cls, n: int, order: int = 1) -> "CyclotomicValue":
        return cls.from_dict(order, {0: n})

    @classmethod
    def from_dense(cls, coeffs, order: int | None = None) -> "CyclotomicValue":
        order = len(coeffs) if order is None else order
        return cls.from_dict(order, {j: int(c) for j, c in enumerate(coeffs) if c})

    def dense(self) -> np.ndarray:
        out = np.zeros(self.order, dtype=np.int64)
        for j, c in self.terms:
            out[j] += c
        return out

    def lift(self, order: int) -> "CyclotomicValue":
        if order % self.order:
            raise ValueError(f"{order} is not a multiple of {self.order}")
        f = order // self.order
        return CyclotomicValue(order, tuple((j * f, c) for j, c in self.terms))

    def _common(self, other: "CyclotomicValue") -> tuple["CyclotomicValue", "CyclotomicValue"]:
        if isinstance(other, int):
            other = CyclotomicValue.integer(other, self.order)
        n = math.lcm(self.order, other.order)
        return self.lift(n), other.lift(n)

    def canonical(self) -> tuple[int, ...]:
        return reduce_mod_cyclotomic(self.dense(), self.order)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = CyclotomicValue.integer(other, self.order)
        if not isinstance(other, CyclotomicValue):
            return NotImplemented
        a, b = self._common(other)
        return not any((a - b).canonical())

    def __hash__(self) -> int:
        return hash((self.order, self.canonical()))

    def __add__(self, other) -> "CyclotomicValue":
        a, b = self._common(other)
        d = dict(a.terms)
        for j, c in b.terms:
            d[j] = d.get(j, 0) + c
        return CyclotomicValue.from_dict(a.order, d)

    __radd__ = __add__

    def __neg__(self) -> "CyclotomicValue":
        return CyclotomicValue(self.order, tuple((j, -c) for j, c in self.terms))

    def __sub__(self, other) -> "CyclotomicValue":
        if isinstance(other, int):
            other = CyclotomicValue.integer(other, self.order)
        return self + (-other)

    def __mul__(self, other) -> "CyclotomicValue":
        if isinstance(other, int):
            return CyclotomicValue.from_dict(self.order, {j: c * other for j, c in self.terms})
        a, b = self._common(other)
        d: dict[int, int] = {}
        for j, c in a.terms:
            for k, e in b.terms:
                key = (j + k) % a.order
                d[key] = d.get(key, 0) + c * e
        return CyclotomicValue.from_dict(a.order, d)

    __rmul__ = __mul__

    def conj(self) -> "CyclotomicValue":
        return CyclotomicValue.from_dict(self.order, {-j: c for j, c in self.terms})

    def __complex__(self) -> complex:
        return complex(sum(c * cmath.exp(2j * math.pi * j / self.order) for j, c in self.terms))

    def rational(self) -> Fraction | None:
        """The value as a rational number, or None if it is irrational."""
        can = self.canonical()
        if any(can[1:]):
            return None
        return Fraction(can[0] if can else 0)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return "+".join(f"{c}*z{self.order}^{j}" if j else str(c) for j, c in self.terms)


def exact_sum_of_products(a_rows, b_rows, weights, order: int) -> np.ndarray:
    """Dense coefficient vector of sum_j w_j a_j * conj(b_j) in Z[x]/(x^order - 1).

    ``a_rows``/``b_rows`` are sequences of CyclotomicValue of the same order.
    """
    acc = np.zeros(order, dtype=object)
    for a, b, w in zip(a_rows, b_rows, weights):
        if not a.terms or not b.terms:
            continue
        ea = np.array([j for j, _ in a.terms], dtype=np.int64)
        ca = np.array([c for _, c in a.terms], dtype=np.int64)
        eb = np.array([j for j, _ in b.terms], dtype=np.int64)
        cb = np.array([c for _, c in b.terms], dtype=np.int64)
        exps = (ea[:, None] - eb[None, :]) % order
        vals = (ca[:, None] * cb[None, :]) * int(w)
        acc += _bincount_int(exps.ravel(), vals.ravel(), order)
    return acc


def _bincount_int(idx: np.ndarray, vals: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.int64)
    np.add.at(out, idx, vals)
    return out.astype(object)
