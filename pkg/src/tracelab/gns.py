"""Finite-dimensional GNS data of a trace, the conjugation representation and the center."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .groups import FiniteGroup, conjugacy_classes
from .traces import ClassFunctionTrace, is_trace

RANK_TOL = 1e-8
OPERATOR_CENTER_LIMIT = 48
KRONECKER_LIMIT = 40
_CHUNK = 32


class NotPositive(ValueError):
    """The Gram matrix of the function is not positive semidefinite."""


@dataclass
class GnsModel:
    """GNS space of a trace on a finite group in orthonormal coordinates.

    Each u_g (the class of the point mass at g) is a column of ``coords``;
    ``pivots`` are the group elements whose u_g form a basis, the identity
    first and then greedily by largest residual.
    """

    trace: ClassFunctionTrace
    pivots: np.ndarray
    chol: np.ndarray  # upper triangular R with Gram[P, P] = R^H R
    coords: np.ndarray  # r x |G|
    tol: float = RANK_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def group(self) -> FiniteGroup:
        return self.trace.group

    @property
    def dim(self) -> int:
        return len(self.pivots)

    @property
    def vector(self) -> np.ndarray:
        return self.coords[:, self.group.identity]

    @cached_property
    def _rinv(self) -> np.ndarray:
        return sla.solve_triangular(self.chol, np.eye(self.dim))

    def pi(self, g: int) -> np.ndarray:
        """Matrix of pi(g): u_h -> u_{gh}."""
        cols = np.atleast_1d(self.group.mul(int(g), self.pivots))
        return self.coords[:, cols] @ self._rinv

    def rho(self, g: int) -> np.ndarray:
        """Matrix of rho(g): u_h -> u_{h g^-1}."""
        cols = np.atleast_1d(self.group.mul(self.pivots, self.group.inv(int(g))))
        return self.coords[:, cols] @ self._rinv

    def conj(self, g: int) -> np.ndarray:
        return self.pi(g) @ self.rho(g)

    def pi_apply(self, g: int, w: np.ndarray) -> np.ndarray:
        cols = np.atleast_1d(self.group.mul(int(g), self.pivots))
        return self.coords[:, cols] @ (self._rinv @ w)

    def element_vector(self, x: np.ndarray) -> np.ndarray:
        """pi(x) v for x in C[G] given as a length-|G| coefficient vector."""
        return self.coords @ x

    @property
    def generators(self) -> list[int]:
        return [int(s) for s in self.group.generators]

    def to_json(self) -> str:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]

        return json.dumps({
            "group": self.group.descriptor,
            "dim": self.dim,
            "pivots": [int(p) for p in self.pivots],
            "vector": enc(self.vector[None])[0],
            "pi": {str(s): enc(self.pi(s)) for s in self.generators},
            "rho": {str(s): enc(self.rho(s)) for s in self.generators},
        })


def gns(phi: ClassFunctionTrace, tol: float = RANK_TOL, check: bool = True) -> GnsModel:
    """GNS construction by greedily pivoted Cholesky of the Gram matrix phi(a^-1 b).

    Each step takes the element with the largest residual norm, so the pivot
    basis is as well conditioned as the trace allows; the search stops when
    every residual is at most ``tol`` (relative to phi(e) = 1).
    """
    if check:
        rep = is_trace(phi)
        if not rep.ok:
            raise NotPositive(f"not a trace: {rep}")
    g = phi.group
    f = phi.on_elements()
    n = g.order
    inv = g.inv(np.arange(n))
    C = np.zeros((n, min(n, 64)), dtype=complex)  # Gram ~ C C^H, one column per pivot
    pivots: list[int] = []
    resid = np.full(n, float(f[g.identity].real))
    c = g.identity  # start from the cyclic vector itself
    while resid[c] > tol:
        k = len(pivots)
        if k == C.shape[1]:
            C = np.concatenate([C, np.zeros((n, min(n, 2 * k) - k), dtype=complex)], axis=1)
        col = f[np.atleast_1d(g.mul(inv, c))].astype(complex)  # Gram[:, c]
        col -= C[:, :k] @ C[c, :k].conj()
        col /= np.sqrt(resid[c])
        C[:, k] = col
        pivots.append(c)
        resid -= np.abs(col) ** 2
        resid[pivots] = 0.0
        c = int(np.argmax(resid))
    P = np.array(pivots, dtype=np.int64)
    C = C[:, :len(P)]
    L = np.tril(C[P])
    return GnsModel(phi, P, L.conj().T, np.ascontiguousarray(C.conj().T), tol)


# ---------------------------------------------------------------------------
# conjugation representation and invariants


def conjugation_rep(model: GnsModel) -> dict[int, np.ndarray]:
    """c(s) = pi(s) rho(s) for each generator s."""
    return {s: model.conj(s) for s in model.generators}


def null_space(blocks: list[np.ndarray], tol: float = 1e-8) -> np.ndarray:
    """Orthonormal null space of the stacked blocks.

    Singular values below ``tol * max(1, s_max)`` count as zero, so an
    all-roundoff matrix has a full null space.
    """
    a = np.vstack(blocks)
    n = a.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=a.shape[0] < n)
    smax = float(s[0]) if len(s) else 0.0
    rank = int(np.sum(s > tol * max(1.0, smax)))
    return vh[rank:].conj().T


def invariant_vectors(model: GnsModel) -> np.ndarray:
    """Orthonormal basis of the c-invariant subspace."""
    n = model.dim
    return null_space([c - np.eye(n) for c in conjugation_rep(model).values()])


def is_character(phi_or_model) -> bool:
    model = phi_or_model if isinstance(phi_or_model, GnsModel) else gns(phi_or_model)
    return invariant_vectors(model).shape[1] == 1


@dataclass
class CenterData:
    commutant: list[np.ndarray]  # basis of pi(G)'
    algebra: list[np.ndarray]  # basis of M = pi(G)''
    center: list[np.ndarray]  # basis of Z(M)
    projections: list[np.ndarray]  # minimal central projections
    method: str

    @property
    def dim(self) -> int:
        return len(self.center)


def _pivot_products(model: GnsModel) -> np.ndarray:
    """Index table ``[p_i p_j]`` over pivot pairs."""
    if "pp" not in model._cache:
        P = model.pivots
        model._cache["pp"] = np.asarray(model.group.mul(P[:, None], P[None, :]))
    return model._cache["pp"]


def _pi_columns(model: GnsModel, ws: np.ndarray) -> np.ndarray:
    """Array ``out[:, i, k] = pi(p_i) ws[:, k]`` for a batch of vectors."""
    z = model._rinv @ ws
    pp = _pivot_products(model)
    r = model.dim
    out = np.empty((r, r, ws.shape[1]), dtype=complex)
    for lo in range(0, r, _CHUNK):
        idx = pp[lo:lo + _CHUNK]
        block = model.coords[:, idx].reshape(r * len(idx), r)
        out[:, lo:lo + _CHUNK] = (block @ z).reshape(r, len(idx), -1)
    return out


def _combine_pivots(model: GnsModel, coeffs: np.ndarray) -> list[np.ndarray]:
    """sum_p c_p pi(p) for each column c of ``coeffs``."""
    r = model.dim
    pp = _pivot_products(model)
    acc = np.zeros((coeffs.shape[1], r * r), dtype=complex)
    for lo in range(0, r, _CHUNK):
        idx = pp[lo:lo + _CHUNK]  # pi(p_i) = coords[:, pp[i]] @ R^-1
        blocks = np.transpose(model.coords[:, idx], (1, 0, 2)).reshape(len(idx), r * r)
        acc += coeffs[lo:lo + _CHUNK].T @ blocks
    return [a.reshape(r, r) @ model._rinv for a in acc]


def _central_coefficients(model: GnsModel, rng: np.random.Generator, probes: int = 4) -> tuple[np.ndarray, str]:
    """Coefficients c with sum_p c_p pi(p) central, as columns.

    Small models solve the commutation equations as operators; larger ones
    apply them to a few random probe vectors.
    """
    r = model.dim
    blocks = []
    if r <= OPERATOR_CENTER_LIMIT:
        pis = [model.pi(int(p)) for p in model.pivots]
        for s in model.generators:
            ps = model.pi(s)
            blocks.append(np.stack([(x @ ps - ps @ x).ravel() for x in pis], axis=1))
        method = "operator"
    else:
        ws = rng.standard_normal((r, probes)) + 1j * rng.standard_normal((r, probes))
        gens = [model.pi(s) for s in model.generators]
        plain = np.ascontiguousarray(np.moveaxis(_pi_columns(model, ws), 2, 0))
        shifted = _pi_columns(model, np.concatenate([ps @ ws for ps in gens], axis=1))
        shifted = np.ascontiguousarray(np.moveaxis(shifted, 2, 0))
        for t, ps in enumerate(gens):
            moved = ps @ plain
            blocks.extend(shifted[t * probes:(t + 1) * probes] - moved)
        method = "probe"
    scale = max(1.0, max(np.abs(b).max(initial=0.0) for b in blocks))
    return null_space([b / scale for b in blocks]), method


def central_element(model: GnsModel, xi: np.ndarray) -> np.ndarray:
    """The element X of M with X v = xi."""
    return _combine_pivots(model, (model._rinv @ xi)[:, None])[0]


def center(model: GnsModel, seed: int = 0, full_bases: bool | None = None) -> CenterData:
    """Commutant, algebra and center of M with its minimal projections.

    The center is solved from the commutation equations; its dimension is
    independent of the c-invariant subspace computed by ``invariant_vectors``.
    The commutant is spanned by rho(G) and M by pi(G), each of dimension
    dim H, and is only materialised for small models unless requested.
    """
    rng = np.random.default_rng(seed)
    r = model.dim
    coeffs, method = _central_coefficients(model, rng)
    zs = _combine_pivots(model, coeffs)
    if full_bases is None:
        full_bases = r <= OPERATOR_CENTER_LIMIT
    alg = [model.pi(int(p)) for p in model.pivots] if full_bases else []
    com = [model.rho(int(p)) for p in model.pivots] if full_bases else []
    gens = [model.pi(s) for s in model.generators]
    projs = minimal_projections(zs, rng, generators=gens)
    return CenterData(com, alg, zs, projs, method)


def minimal_projections(central: list[np.ndarray], rng: np.random.Generator,
                        attempts: int = 5, tol: float = 1e-6,
                        generators: list[np.ndarray] = ()) -> list[np.ndarray]:
    """Spectral projections of a random self-adjoint central element."""
    if not central:
        return []
    n = central[0].shape[0]
    k = len(central)
    for _ in range(attempts):
        t = rng.standard_normal(k)
        h = sum(ti * (z + z.conj().T) / 2 for ti, z in zip(t, central))
        t2 = rng.standard_normal(k)
        h = h + sum(ti * (z - z.conj().T) / 2j for ti, z in zip(t2, central))
        vals, vecs = np.linalg.eigh(h)
        groups = [[0]]
        spread = max(1.0, float(np.abs(vals).max()))
        for i in range(1, n):
            if vals[i] - vals[groups[-1][-1]] > tol * spread:
                groups.append([i])
            else:
                groups[-1].append(i)
        if len(groups) != k:
            continue
        projs = [vecs[:, g] @ vecs[:, g].conj().T for g in groups]
        # spectral projections of h lie in M; commuting with pi(G) puts them in Z(M)
        if _projections_ok(projs, list(generators) or list(central), tol):
            return projs
    raise RuntimeError("could not separate the minimal central projections")


def _projections_ok(projs, commuting, tol) -> bool:
    n = projs[0].shape[0]
    total = sum(projs)
    if np.abs(total - np.eye(n)).max() > tol:
        return False
    for p in projs:
        if np.abs(p @ p - p).max() > tol or np.abs(p - p.conj().T).max() > tol:
            return False
        if any(np.abs(p @ z - z @ p).max() > tol * max(1.0, np.abs(z).max()) for z in commuting):
            return False
    return True


def decompose_trace(phi: ClassFunctionTrace, seed: int = 0, model: GnsModel | None = None):
    """Split a trace into characters along the minimal central projections.

    Returns ``(weight, character)`` pairs, heaviest first; the characters are
    class functions on the same group.
    """
    model = gns(phi) if model is None else model
    cd = center(model, seed=seed, full_bases=False)
    g = model.group
    cls = conjugacy_classes(g)
    v = model.vector
    out = []
    for p in cd.projections:
        xi = p @ v
        w = float(np.vdot(xi, xi).real)
        if w <= model.tol:
            continue
        a = model._rinv @ xi  # xi = sum_p a_p u_p
        y = xi.conj() @ model.coords  # y_h = <u_h, xi>
        idx = g.mul(cls.reps[:, None], model.pivots[None, :])
        vals = (y[idx] * a[None, :]).sum(axis=1) / w
        out.append((w, ClassFunctionTrace(g, vals, "component", phi.table)))
    out.sort(key=lambda t: -t[0])
    return out


def fd_subrep_detector(rep) -> int:
    """Dimension of the self-intertwiner space of a representation.

    ``rep`` is a GnsModel or a list of generator matrices. Small cases solve
    X pi(s) = pi(s) X directly; larger GNS models use the character formula
    (1/|G|) sum_g |tr pi(g)|^2.
    """
    if isinstance(rep, GnsModel):
        r = rep.dim
        if r > KRONECKER_LIMIT:
            g = rep.group
            traces = np.empty(g.order, dtype=complex)
            rinv = rep._rinv
            for h in range(g.order):
                cols = np.atleast_1d(g.mul(h, rep.pivots))
                traces[h] = np.einsum("ab,ba->", rep.coords[:, cols], rinv)
            return int(round(float(np.sum(np.abs(traces) ** 2) / g.order)))
        mats = [rep.pi(s) for s in rep.generators]
    else:
        mats = [np.asarray(m, dtype=complex) for m in rep]
    n = mats[0].shape[0]
    eye = np.eye(n)
    # vec(X A - A X) = (A^T kron I - I kron A) vec(X)
    blocks = [np.kron(a.T, eye) - np.kron(eye, a) for a in mats]
    return null_space(blocks).shape[1]
