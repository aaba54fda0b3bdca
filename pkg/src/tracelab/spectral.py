"""Spectral-gap certificates: operator norms against trace inequalities.

Every criterion is evaluated twice. The matrix side takes singular values
of GNS operators. The trace side only evaluates the trace and tests the
equivalent inequality as a Hermitian form on C[G] (or on C[S] for a finite
set S of an infinite group).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .gns import GnsModel, gns, null_space
from .groups import FiniteGroup, IntegerMatrix
from .traces import (ClassFunctionTrace, NonConvergence, PartialTrace, PulledBackTrace,
                     evaluate, pointwise_limit)

DEFAULT_TOL = 1e-9
N_RANDOM = 1000
PAIR_LIMIT = 400


# ---------------------------------------------------------------------------
# group algebra


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


@dataclass(frozen=True)
class GroupAlgebraElement:
    """Finitely supported element of C[G]; keys are group indices or IntegerMatrix."""

    terms: tuple
    group: FiniteGroup | None = field(default=None, compare=False)

    @classmethod
    def of(cls, coeffs: dict, group: FiniteGroup | None = None) -> "GroupAlgebraElement":
        acc: dict = {}
        for g, c in coeffs.items():
            key = int(g) if group is not None else g
            acc[key] = acc.get(key, 0) + c
        items = [(g, c) for g, c in acc.items() if c != 0]
        if not items:
            raise ValueError("support must be nonempty")
        items.sort(key=lambda t: t[0] if group is not None else t[0].flat())
        return cls(tuple(items), group)

    @classmethod
    def uniform(cls, elems: Sequence, group: FiniteGroup | None = None) -> "GroupAlgebraElement":
        coeffs: dict = {}
        for g in elems:
            key = int(g) if group is not None else g
            coeffs[key] = coeffs.get(key, 0) + Fraction(1, len(elems))
        return cls.of(coeffs, group)

    @classmethod
    def delta(cls, g, group: FiniteGroup | None = None) -> "GroupAlgebraElement":
        return cls.of({g: 1}, group)

    def _mul(self, x, y):
        return int(self.group.mul(x, y)) if self.group is not None else x @ y

    def _inv(self, x):
        return int(self.group.inv(x)) if self.group is not None else x.inverse()

    def star(self) -> "GroupAlgebraElement":
        return GroupAlgebraElement.of(
            {self._inv(g): (c if _is_exact(c) else complex(c).conjugate()) for g, c in self.terms},
            self.group)

    def __mul__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        acc: dict = {}
        for g, c in self.terms:
            for h, d in other.terms:
                k = self._mul(g, h)
                acc[k] = acc.get(k, 0) + c * d
        return GroupAlgebraElement.of(acc, self.group)

    def l1(self):
        return sum(abs(c) for _, c in self.terms)

    def total(self):
        return sum(c for _, c in self.terms)

    @property
    def support(self) -> list:
        return [g for g, _ in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([complex(c) for _, c in self.terms])

    def reduced(self, group: FiniteGroup) -> "GroupAlgebraElement":
        """Push an element of C[SL_d(Z)] forward to C[SL_d(Z/m)]."""
        from .groups import reduce

        return GroupAlgebraElement.of({reduce(g, group): c for g, c in self.terms}, group)


def self_convolution(a: GroupAlgebraElement) -> GroupAlgebraElement:
    """b = a* a."""
    return a.star() * a


# ---------------------------------------------------------------------------
# norms with error bounds


def operator_sum(model: GnsModel, a: GroupAlgebraElement, kind: str = "pi") -> np.ndarray:
    ops = {"pi": model.pi, "rho": model.rho, "conj": model.conj}[kind]
    return sum(complex(c) * ops(int(g)) for g, c in a.terms)


def certified_norm(A: np.ndarray) -> tuple[float, float]:
    """Largest singular value with a residual-based error bound.

    If (u, s, w) satisfies ||A w - s u|| <= e1 and ||A^H u - s w|| <= e2 for
    unit u, w then some singular value of A lies within max(e1, e2) of s.
    Roundoff in forming A is added as eps * ||A||_F.
    """
    if A.size == 0:
        return 0.0, 0.0
    u, s, vh = np.linalg.svd(A)
    s0 = float(s[0])
    u0, w0 = u[:, 0], vh[0].conj()
    e1 = np.linalg.norm(A @ w0 - s0 * u0)
    e2 = np.linalg.norm(A.conj().T @ u0 - s0 * w0)
    err = float(max(e1, e2) + np.finfo(float).eps * np.linalg.norm(A) * max(A.shape))
    return s0, err


def certified_digits(value: float, err: float) -> int:
    if err <= 0:
        return 16
    return int(max(0, min(16, math.floor(-math.log10(err / max(abs(value), 1e-300))))))


# ---------------------------------------------------------------------------
# trace-side Hermitian forms


def _quad(xs: np.ndarray, H: np.ndarray) -> np.ndarray:
    """x^H H x for each row x of ``xs``."""
    return np.sum((xs.conj() @ H) * xs, axis=1)


def _b_arrays(b: GroupAlgebraElement) -> tuple[np.ndarray, np.ndarray]:
    return np.array([int(g) for g in b.support], dtype=np.int64), b.coefficients


@dataclass
class FormPencil:
    """Hermitian forms with Q(beta) = B - beta G - (1 - beta) F."""

    B: np.ndarray
    G: np.ndarray
    F: np.ndarray | None = None

    def at(self, beta: float) -> np.ndarray:
        Q = self.B - beta * self.G
        if self.F is not None:
            Q = Q - (1 - beta) * self.F
        return Q


def _gram_part(phi: ClassFunctionTrace, X: np.ndarray) -> np.ndarray:
    g = phi.group
    f = phi.on_elements()
    return f[g.mul(g.inv(X)[:, None], X[None, :])]


def pi_pencil(phi: ClassFunctionTrace, b: GroupAlgebraElement, support=None) -> FormPencil:
    """Forms of phi(x* b x) and phi(x* x)."""
    g = phi.group
    f = phi.on_elements()
    X = np.arange(g.order) if support is None else np.asarray(support, dtype=np.int64)
    hinv = g.inv(X)[:, None]
    B = np.zeros((len(X), len(X)), dtype=complex)
    gam, coef = _b_arrays(b)
    for t, c in zip(gam, coef):
        B += c * f[g.mul(hinv, g.mul(int(t), X)[None, :])]
    return FormPencil(B, _gram_part(phi, X))


def conj_pencil(phi: ClassFunctionTrace, b: GroupAlgebraElement, support=None) -> FormPencil:
    """Forms of phi(sum_g b_g g* x* g x), phi(x* x) and |phi(x)|^2."""
    g = phi.group
    f = phi.on_elements()
    X = np.arange(g.order) if support is None else np.asarray(support, dtype=np.int64)
    hinv = g.inv(X)
    B = np.zeros((len(X), len(X)), dtype=complex)
    gam, coef = _b_arrays(b)
    for t, c in zip(gam, coef):
        t = int(t)
        left = g.mul(g.inv(t), g.mul(hinv, t))  # t^-1 h^-1 t
        B += c * f[g.mul(left[:, None], X[None, :])]
    fx = f[X]
    return FormPencil(B, _gram_part(phi, X), np.outer(fx.conj(), fx))


def pi_form(phi: ClassFunctionTrace, b: GroupAlgebraElement, beta: float, support=None) -> np.ndarray:
    """Q with x^H Q x = phi(x*(b - beta)x) for x supported on ``support``."""
    return pi_pencil(phi, b, support).at(beta)


def conj_form(phi: ClassFunctionTrace, b: GroupAlgebraElement, beta: float, support=None) -> np.ndarray:
    """Q with x^H Q x = phi(sum_g b_g g* x* g x - beta x*x) - (1-beta)|phi(x)|^2."""
    return conj_pencil(phi, b, support).at(beta)


def conj_form_general(phi, b_terms, beta: float, support: Sequence, mul, inv) -> np.ndarray:
    """Same form as ``conj_form`` for any evaluable trace and explicit operations."""
    X = list(support)
    n = len(X)
    Xinv = [inv(x) for x in X]
    Q = np.zeros((n, n), dtype=complex)
    for i in range(n):
        Q[i] -= beta * evaluate(phi, [mul(Xinv[i], x) for x in X])
    for t, c in b_terms:
        tinv = inv(t)
        for i in range(n):
            left = mul(tinv, mul(Xinv[i], t))
            Q[i] += complex(c) * evaluate(phi, [mul(left, x) for x in X])
    fx = evaluate(phi, X)
    return Q - (1 - beta) * np.outer(fx.conj(), fx)


@dataclass
class FormSweep:
    max_eig: float
    basis: float
    pairs: float
    random: float
    witnesses: list

    @property
    def max_residual(self) -> float:
        return max(self.basis, self.pairs, self.random)


class _Probe:
    """Quadratic values of one Hermitian matrix on the fixed test vectors."""

    def __init__(self, H: np.ndarray, hh, gg, xs):
        self.diag = H.diagonal().real
        off = H[hh, gg]
        base = (self.diag[hh] + self.diag[gg]) / 2
        self.pairs = np.stack([base + off.real, base - off.real, base - off.imag, base + off.imag])
        self.random = _quad(xs, H).real


def sweep_pencil(pencil: FormPencil, betas: Sequence[float], rng: np.random.Generator,
                 n_random: int = N_RANDOM, tol: float = DEFAULT_TOL,
                 labels: Sequence | None = None) -> list[FormSweep]:
    """Evaluate x^H Q(beta) x on basis vectors, pairwise (e_h +- e_g)/sqrt2,
    (e_h +- i e_g)/sqrt2 and random unit x, for several beta at once."""
    herm = [(M + M.conj().T) / 2 for M in (pencil.B, pencil.G, pencil.F) if M is not None]
    n = herm[0].shape[0]
    if n <= PAIR_LIMIT:
        hh, gg = np.triu_indices(n, 1)
    else:
        hh = rng.integers(0, n, PAIR_LIMIT**2 // 2)
        gg = rng.integers(0, n, PAIR_LIMIT**2 // 2)
    xs = rng.standard_normal((n_random, n)) + 1j * rng.standard_normal((n_random, n))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    probes = [_Probe(H, hh, gg, xs) for H in herm]
    lab = (lambda i: labels[i]) if labels is not None else (lambda i: int(i))
    out = []
    for beta in betas:
        coefs = [1.0, -beta] + ([-(1 - beta)] if pencil.F is not None else [])
        Q = sum(c * H for c, H in zip(coefs, herm))
        lam = float(np.linalg.eigvalsh(Q)[-1]) if n else 0.0
        diag = sum(c * p.diag for c, p in zip(coefs, probes))
        pairs = sum(c * p.pairs for c, p in zip(coefs, probes))
        vals = sum(c * p.random for c, p in zip(coefs, probes))
        basis = float(diag.max(initial=-np.inf))
        pmax = float(pairs.max(initial=-np.inf)) if len(hh) else -np.inf
        rmax = float(vals.max(initial=-np.inf))
        wit = []
        if basis > tol:
            wit.append(f"basis {lab(int(diag.argmax()))}: {basis:.3e}")
        if pmax > tol:
            k, j = np.unravel_index(int(pairs.argmax()), pairs.shape)
            wit.append(f"pair ({lab(int(hh[j]))},{lab(int(gg[j]))}) sign {k}: {pmax:.3e}")
        if rmax > tol:
            wit.append(f"random #{int(vals.argmax())}: {rmax:.3e}")
        out.append(FormSweep(lam, basis, pmax, rmax, wit))
    return out


def sweep_form(Q: np.ndarray, rng: np.random.Generator, n_random: int = N_RANDOM,
               tol: float = DEFAULT_TOL, labels: Sequence | None = None) -> FormSweep:
    """Single-matrix version of :func:`sweep_pencil`."""
    zero = np.zeros_like(Q)
    return sweep_pencil(FormPencil(Q, zero), [0.0], rng, n_random, tol, labels)[0]


# ---------------------------------------------------------------------------
# reports


@dataclass
class GapReport:
    criterion: str
    beta: float
    norm: float
    norm_error: float
    digits: int
    form_max_eig: float
    residuals: dict
    violations: list
    test_set: str
    holds_matrix: bool
    holds_inequality: bool

    @property
    def agree(self) -> bool:
        return self.holds_matrix == self.holds_inequality

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["agree"] = self.agree
        return d


def _report(criterion, beta, norm, err, sweep: FormSweep, test_set, tol) -> GapReport:
    holds_m = norm**2 <= beta + tol
    holds_i = sweep.max_eig <= tol
    return GapReport(criterion, float(beta), norm, err, certified_digits(norm, err), sweep.max_eig,
                     {"basis": sweep.basis, "pairs": sweep.pairs, "random": sweep.random},
                     sweep.witnesses, test_set, bool(holds_m), bool(holds_i))


def _finite_a(a: GroupAlgebraElement, phi: ClassFunctionTrace) -> GroupAlgebraElement:
    if a.group is None:
        raise TypeError("element must live on the finite group of the trace")
    return a


def norm_pi(phi: ClassFunctionTrace, a: GroupAlgebraElement, beta=None,
            model: GnsModel | None = None, n_random: int = N_RANDOM, seed: int = 0,
            tol: float = DEFAULT_TOL):
    """||pi(a)|| against the equivalent inequality phi(x*(b - beta)x) <= 0.

    With ``beta`` None returns (norm, error); with a number, one GapReport;
    with a sequence, one report per value.
    """
    a = _finite_a(a, phi)
    model = gns(phi) if model is None else model
    norm, err = certified_norm(operator_sum(model, a, "pi"))
    if beta is None:
        return norm, err
    pencil = pi_pencil(phi, self_convolution(a))
    return _reports("pi", pencil, beta, norm, err, phi.group.order, n_random, seed, tol)


def _reports(criterion, pencil, beta, norm, err, order, n_random, seed, tol):
    betas = [beta] if np.ndim(beta) == 0 else list(beta)
    sweeps = sweep_pencil(pencil, betas, np.random.default_rng(seed), n_random, tol)
    test_set = _test_set(order, n_random)
    reps = [_report(criterion, b, norm, err, sw, test_set, tol) for b, sw in zip(betas, sweeps)]
    return reps[0] if np.ndim(beta) == 0 else reps


def restricted_conj_norm(model: GnsModel, a: GroupAlgebraElement) -> tuple[float, float]:
    """||c(a)|| on the orthogonal complement of the cyclic vector."""
    C = operator_sum(model, a, "conj")
    v = model.vector
    P = np.eye(model.dim) - np.outer(v, v.conj())
    return certified_norm(C @ P)


def norm_conj(phi: ClassFunctionTrace, a: GroupAlgebraElement, beta,
              model: GnsModel | None = None, n_random: int = N_RANDOM, seed: int = 0,
              tol: float = DEFAULT_TOL):
    """Restricted norm of c(a) against the conjugation inequality (one or many beta)."""
    a = _finite_a(a, phi)
    model = gns(phi) if model is None else model
    norm, err = restricted_conj_norm(model, a)
    pencil = conj_pencil(phi, self_convolution(a))
    return _reports("conj", pencil, beta, norm, err, phi.group.order, n_random, seed, tol)


def _test_set(n: int, n_random: int) -> str:
    pairs = "all pairs" if n <= PAIR_LIMIT else "sampled pairs"
    return f"basis of C[G] (|G|={n}), {pairs} (+-, +-i), {n_random} random unit vectors"


def beta_grid(norm: float, count: int = 20, below: float = 0.05) -> np.ndarray:
    """``count`` values spanning [norm^2 - below, 1], clipped at 0."""
    return np.linspace(max(0.0, norm**2 - below), 1.0, count)


# ---------------------------------------------------------------------------
# identities


def identity_checks(model: GnsModel, n: int = N_RANDOM, seed: int = 0) -> dict:
    """Largest deviations in ||pi(x)v||^2 = phi(x*x) and <c(g)w,w> = phi(g*x*gx)."""
    g = model.group
    rng = np.random.default_rng(seed)
    f = model.trace.on_elements()
    N = g.order
    all_idx = np.arange(N)
    gram = f[g.mul(g.inv(all_idx)[:, None], all_idx[None, :])]
    xs = rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    ws = model.coords @ xs.T  # pi(x) v, one column per x
    lhs = np.sum(np.abs(ws) ** 2, axis=0)
    rhs = _quad(xs, gram)
    err_norm = float(np.max(np.abs(lhs - rhs)))
    gens = model.generators
    err_conj = 0.0
    for s in gens:
        C = model.conj(s)
        left = g.mul(g.inv(s), g.mul(g.inv(all_idx), s))
        form = f[g.mul(left[:, None], all_idx[None, :])]
        lhs = np.einsum("ik,ik->k", ws.conj(), C @ ws)
        rhs = _quad(xs, form)
        err_conj = max(err_conj, float(np.max(np.abs(lhs - rhs))))
    return {"norm_identity": err_norm, "conj_identity": err_conj}


# ---------------------------------------------------------------------------
# tensor criteria


def _tensor_operator(model: GnsModel, a: GroupAlgebraElement, restrict: bool):
    r = model.dim
    mats = [(complex(c), model.pi(int(g))) for g, c in a.terms]

    def apply(t):
        T = t.reshape(r, r)
        if restrict:
            T = T - np.trace(T) / r * np.eye(r)
        out = sum(c * (P @ T @ P.conj().T) for c, P in mats)
        if restrict:
            out = out - np.trace(out) / r * np.eye(r)
        return out.ravel()

    def apply_h(t):
        T = t.reshape(r, r)
        if restrict:
            T = T - np.trace(T) / r * np.eye(r)
        out = sum(np.conj(c) * (P.conj().T @ T @ P) for c, P in mats)
        if restrict:
            out = out - np.trace(out) / r * np.eye(r)
        return out.ravel()

    return spla.LinearOperator((r * r, r * r), matvec=apply, rmatvec=apply_h, dtype=complex)


def _op_norm(op, n: int) -> float:
    if n == 0:
        return 0.0
    if n <= 400:
        dense = op.matmat(np.eye(n, dtype=complex))
        return float(np.linalg.norm(dense, 2))
    return float(spla.svds(op, k=1, return_singular_vectors=False, random_state=0)[0])


@dataclass
class TensorReport:
    beta: float
    dim: int
    full_norm: float
    restricted_norm: float
    norm_identity_error: float
    tensor_identity_error: float
    hypothesis: bool
    worst_margin: float | None  # max of LHS - RHS of the finite-dimensional inequality
    violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def norm_tensor(phi: ClassFunctionTrace, a: GroupAlgebraElement, beta: float,
                model: GnsModel | None = None, families: int = 200, k: int = 3,
                seed: int = 0, tol: float = DEFAULT_TOL) -> TensorReport:
    """Norms of (pi x pi*)(a) on HS(H) and on the complement of Id.

    The identity chain expressing ||w||^2 and ||(pi x pi*)(a)w||^2 through
    the trace is checked on random families (x_i, y_i). When the restricted
    norm is at most sqrt(beta) the finite-dimensional inequality is tested on
    the same families.
    """
    model = gns(phi) if model is None else model
    r = model.dim
    full = _op_norm(_tensor_operator(model, a, False), r * r)
    restricted = _op_norm(_tensor_operator(model, a, True), r * r) if r > 1 else 0.0
    g = model.group
    f = phi.on_elements()
    N = g.order
    rng = np.random.default_rng(seed)
    b = self_convolution(a)
    gam, coef = _b_arrays(b)
    idx = np.arange(N)
    gram = f[g.mul(g.inv(idx)[:, None], idx[None, :])]
    gforms = [f[g.mul(g.inv(idx)[:, None], g.mul(int(t), idx)[None, :])] for t in gam]
    hyp = restricted <= math.sqrt(beta) + tol
    err_w = err_t = 0.0
    worst = -np.inf
    bad = 0
    for _ in range(families):
        xs = _sparse_random(rng, k, N)
        ys = _sparse_random(rng, k, N)
        # ||w||^2 from matrices: w = sum_i xi_i eta_i^H as an operator
        W = sum(np.outer(model.coords @ x, (model.coords @ y).conj()) for x, y in zip(xs, ys))
        lhs_w = float(np.vdot(W, W).real)
        phis = xs.conj() @ gram @ xs.T  # [j, i] = phi(x_j^* x_i)
        psis = ys.conj() @ gram @ ys.T
        rhs_w = float(np.sum(phis * psis.conj()).real)
        err_w = max(err_w, abs(lhs_w - rhs_w))
        Aw = sum(complex(c) * model.pi(int(t)) @ W @ model.pi(int(t)).conj().T
                 for t, c in zip(a.support, a.coefficients))
        lhs_t = float(np.vdot(Aw, Aw).real)
        terms = sum(c * np.sum((xs.conj() @ F @ xs.T) * (ys.conj() @ F @ ys.T).conj())
                    for c, F in zip(coef, gforms))
        rhs_t = float(np.real(terms))
        err_t = max(err_t, abs(lhs_t - rhs_t))
        if hyp:
            l1 = sum(np.abs(x).sum() * np.abs(y).sum() for x, y in zip(xs, ys))
            margin = (rhs_t - beta * rhs_w) - (1 - beta) * l1**2 / r**3
            worst = max(worst, margin)
            bad += int(margin > tol)
    return TensorReport(float(beta), r, full, restricted, err_w, err_t, bool(hyp),
                        float(worst) if hyp else None, bad)


def _sparse_random(rng, k: int, n: int, nnz: int = 4) -> np.ndarray:
    out = np.zeros((k, n), dtype=complex)
    for i in range(k):
        pos = rng.choice(n, size=min(nnz, n), replace=False)
        out[i, pos] = rng.standard_normal(len(pos)) + 1j * rng.standard_normal(len(pos))
    return out


# ---------------------------------------------------------------------------
# complement of an invariant vector


class PreconditionError(ValueError):
    pass


@dataclass
class ComplementReport:
    restricted_norm: float
    norm_side: bool
    inequality_side: bool
    min_form_eig: float
    sampled_min: float
    witness: np.ndarray | None

    @property
    def agree(self) -> bool:
        return self.norm_side == self.inequality_side


def complement_norm_lemma(A: np.ndarray, v: np.ndarray, beta: float, samples: int = 200,
                          seed: int = 0, tol: float = DEFAULT_TOL) -> ComplementReport:
    """Compare ||A on v^perp|| <= sqrt(beta) with
    beta||w||^2 - ||Aw||^2 >= (beta - 1)|<w, v>|^2 for all w.

    Both A v = v and A^H v = v are required: the equivalence needs the
    complement of v to be invariant as well.
    """
    A = np.asarray(A, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if not 0 < beta < 1:
        raise PreconditionError("beta must lie in (0, 1)")
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise PreconditionError("v is not a unit vector")
    if np.linalg.norm(A @ v - v) > 1e-9 or np.linalg.norm(A.conj().T @ v - v) > 1e-9:
        raise PreconditionError("v is not invariant under A and its adjoint")
    n = len(v)
    P = np.eye(n) - np.outer(v, v.conj())
    rnorm = float(np.linalg.norm(A @ P, 2))
    M = beta * np.eye(n) - A.conj().T @ A - (beta - 1) * np.outer(v, v.conj())
    M = (M + M.conj().T) / 2
    evals, evecs = np.linalg.eigh(M)
    rng = np.random.default_rng(seed)
    ws = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    ws /= np.linalg.norm(ws, axis=1, keepdims=True)
    vals = _quad(ws, M).real
    ineq = evals[0] >= -tol
    witness = None if ineq else evecs[:, 0]
    return ComplementReport(rnorm, rnorm <= math.sqrt(beta) + tol, bool(ineq), float(evals[0]),
                            float(vals.min()), witness)


# ---------------------------------------------------------------------------
# propagation to limits


@dataclass
class PropagationReport:
    betas: list
    beta_star: float | None
    common: bool
    limit_tolerance: float | None
    form_max_eig: float | None
    holds: bool
    note: str

    def to_dict(self) -> dict:
        return asdict(self)


def conj_gap_of_pullback(trace: PulledBackTrace, a: GroupAlgebraElement) -> float:
    """Squared restricted c(a)-norm of a pulled-back character, on its finite quotient."""
    phi = ClassFunctionTrace.from_table_row(trace.table, trace.row, trace.group)
    model = gns(phi, check=False)
    norm, _ = restricted_conj_norm(model, a.reduced(trace.group))
    return norm**2


def certificate_propagation(sequence: Sequence[PulledBackTrace], a: GroupAlgebraElement,
                            S: Sequence[IntegerMatrix], X: Sequence[IntegerMatrix],
                            beta: float | None = None, limit_tol: float = 0.15,
                            snap=(-1.0, 0.0, 1.0), gap_margin: float = 1e-6,
                            tol: float = 1e-8) -> PropagationReport:
    """Carry the conjugation inequality from a sequence of pulled-back characters to its limit.

    ``a`` lives on SL_d(Z); ``X`` is the support of the test vectors and ``S``
    must contain every element the inequality evaluates on X.
    """
    betas = [conj_gap_of_pullback(t, a) for t in sequence]
    b_star = max(betas) if beta is None else beta
    common = b_star <= 1 - gap_margin and all(x <= b_star + tol for x in betas)
    if not common:
        return PropagationReport(betas, None, False, None, None, False,
                                 "no common beta < 1; nothing propagated")
    try:
        limit = pointwise_limit(sequence, S, tol=limit_tol, snap=snap)
    except NonConvergence as exc:
        return PropagationReport(betas, b_star, True, None, None, False, f"no limit: {exc}")
    b = self_convolution(a)
    Q = conj_form_general(limit, b.terms, b_star, X, lambda x, y: x @ y, lambda x: x.inverse())
    lam = float(np.linalg.eigvalsh((Q + Q.conj().T) / 2)[-1])
    return PropagationReport(betas, b_star, True, limit.tolerance, lam, lam <= tol,
                             "limit satisfies the inequality" if lam <= tol else "violated")


def required_support(X: Sequence[IntegerMatrix], b: GroupAlgebraElement) -> list[IntegerMatrix]:
    """Every element at which the conjugation form on X evaluates a trace."""
    out = dict.fromkeys(X)
    for h in X:
        hinv = h.inverse()
        for g in X:
            out.setdefault(hinv @ g)
            for t, _ in b.terms:
                out.setdefault(t.inverse() @ hinv @ t @ g)
    return list(out)
