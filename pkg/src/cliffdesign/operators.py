"""Dense operators on t copies of one qubit: r(T), Q_T, CSS projectors and twirls.

Basis state |x> of (C^2)^{(x)t} has index x, with copy i on bit i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gf2
from ._kernels import popcount_array, span_array
from .errors import ResourceLimitError
from .gf2 import F2Subspace
from .lagrangian import (
    DefectSubspace,
    StochasticLagrangian,
    StochasticOrthogonal,
    defects,
    enumerate_Ot,
    permutation_matrix,
)

MAX_DENSE_T = 12
MAX_HAAR_T = 6


def _check_t(t: int, limit: int = MAX_DENSE_T) -> None:
    if not 1 <= t <= limit:
        raise ResourceLimitError(f"dense operators need 1 <= t <= {limit}, got {t}")


@lru_cache(maxsize=None)
def weights(t: int) -> np.ndarray:
    w = popcount_array(np.arange(1 << t))
    w.setflags(write=False)
    return w


def r_of(T: StochasticLagrangian) -> np.ndarray:
    """r(T) = sum over (x, y) in T of |x><y|, as a real 0/1 matrix."""
    t = T.t
    _check_t(t)
    elems = span_array(T.space.basis)
    mask = np.uint64((1 << t) - 1)
    xs = (elems & mask).astype(np.intp)
    ys = (elems >> np.uint64(t)).astype(np.intp)
    r = np.zeros((1 << t, 1 << t))
    r[xs, ys] = 1.0
    return r


def q_of(T: StochasticLagrangian) -> np.ndarray:
    return r_of(T) * 2.0 ** (-T.t / 2)


def orthogonal_operator(O: StochasticOrthogonal) -> np.ndarray:
    """r(T_O): the map |x> -> |Ox>."""
    t = O.t
    _check_t(t)
    d = 1 << t
    r = np.zeros((d, d))
    for x in range(d):
        r[O.apply(x), x] = 1.0
    return r


def permutation_operator(perm: tuple[int, ...]) -> np.ndarray:
    return orthogonal_operator(permutation_matrix(tuple(perm)))


def pauli_x(q: int, t: int) -> np.ndarray:
    d = 1 << t
    m = np.zeros((d, d))
    m[np.arange(d) ^ q, np.arange(d)] = 1.0
    return m


def pauli_z(p: int, t: int) -> np.ndarray:
    signs = 1.0 - 2.0 * (popcount_array(np.arange(1 << t) & p) & 1)
    return np.diag(signs)


def css_projector(N: DefectSubspace | F2Subspace, t: int | None = None) -> np.ndarray:
    """P_N = |N|^-2 sum over p, q in N of Z(p) X(q); identity when N = {0}."""
    space = N.space if isinstance(N, DefectSubspace) else N
    t = space.ambient_dim if t is None else t
    if space.ambient_dim != t:
        raise ValueError("defect subspace lives in the wrong ambient dimension")
    if not isinstance(N, DefectSubspace):
        DefectSubspace(space)
    _check_t(t)
    elems = gf2.span(space)
    xsum = sum(pauli_x(q, t) for q in elems)
    zsum = sum(pauli_z(p, t) for p in elems)
    return zsum @ xsum / len(elems) ** 2


def schatten_norms(A: np.ndarray) -> tuple[float, float, float]:
    """(trace norm, Frobenius norm, operator norm)."""
    s = np.linalg.svd(A, compute_uv=False)
    return float(s.sum()), float(np.sqrt((s**2).sum())), float(s.max())


def decompose(T: StochasticLagrangian, atol: float = 1e-10):
    """Find (O, N) with r(T) = 2^{dim N} r(O) P_N, N the right defect; None if absent."""
    _, N = defects(T)
    r = r_of(T)
    P = css_projector(N, T.t)
    scale = 2.0**N.dim
    for O in enumerate_Ot(T.t):
        if np.allclose(r, scale * orthogonal_operator(O) @ P, rtol=0, atol=atol):
            return O, N
    return None


def verify_decomposition(T: StochasticLagrangian) -> bool:
    return decompose(T) is not None


@dataclass(frozen=True)
class HaarSymmetrizer:
    """Orthogonal projection onto the span of the t! copy-permutation operators."""

    t: int
    orthonormal_basis: np.ndarray  # (rank, 4^t), real rows

    @property
    def rank(self) -> int:
        return self.orthonormal_basis.shape[0]

    def apply(self, A: np.ndarray) -> np.ndarray:
        d = 1 << self.t
        B = self.orthonormal_basis
        v = np.asarray(A).reshape(-1)
        return (B.T @ (B @ v)).reshape(d, d)

    def superoperator(self) -> np.ndarray:
        """P_H as a 4^t x 4^t matrix acting on row-major vectorized operators."""
        B = self.orthonormal_basis
        return B.T @ B


@lru_cache(maxsize=None)
def haar_symmetrizer(t: int) -> HaarSymmetrizer:
    _check_t(t, MAX_HAAR_T)
    vecs = np.array([permutation_operator(p).reshape(-1)
                     for p in itertools.permutations(range(t))])
    _, s, vt = np.linalg.svd(vecs, full_matrices=False)
    keep = s > 1e-9 * s[0]
    basis = vt[keep]
    basis.setflags(write=False)
    return HaarSymmetrizer(t, basis)


def haar_apply(t: int, A: np.ndarray) -> np.ndarray:
    return haar_symmetrizer(t).apply(A)


def diag_apply(t: int, A: np.ndarray) -> np.ndarray:
    """Twirl over diagonal unitaries: keep |x><y| only where h(x) = h(y)."""
    _check_t(t)
    w = weights(t)
    return np.where(w[:, None] == w[None, :], A, 0)


def hs_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(A^dagger B)."""
    return complex(np.vdot(A, B))


def haar_overlap(T: StochasticLagrangian) -> float:
    """<Q_T|P_H|Q_T> = 2^-t ||P_H[r(T)]||_2^2."""
    ph = haar_apply(T.t, r_of(T))
    return float(np.sum(ph * ph) / 2**T.t)


def diag_overlap(T: StochasticLagrangian) -> float:
    pd = diag_apply(T.t, r_of(T))
    return float(np.sum(pd * pd) / 2**T.t)


def css_haar_overlap(N: DefectSubspace, t: int) -> float:
    """2^{-t + 2 dim N} (P_N, P_H[P_N])."""
    P = css_projector(N, t)
    return float(np.sum(P * haar_apply(t, P)) * 2.0 ** (-t + 2 * N.dim))


def dense_overlap(T1: StochasticLagrangian, T2: StochasticLagrangian) -> float:
    """<Q_T1|Q_T2> by a dense trace."""
    return float(np.sum(r_of(T1) * r_of(T2)) / 2**T1.t)


def pair_elements(T: StochasticLagrangian) -> tuple[np.ndarray, np.ndarray]:
    elems = span_array(T.space.basis)
    mask = np.uint64((1 << T.t) - 1)
    return elems & mask, elems >> np.uint64(T.t)

