"""Gram-matrix algebra of the commutant basis {Q_T^{(x)n}}.

Overlaps are powers of two, <Q_T|Q_T'> = 2^{dim(T n T') - t}, so the Gram
matrix is stored by the integer exponents g(T, T') and materialized on
demand as 2^{n g}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from . import gf2
from ._kernels import pairwise_union_rank
from .errors import ConditioningError, DimensionError
from .lagrangian import StochasticLagrangian, enumerate_sigma

CONDITION_RATIO = 1e-12


def overlap_exact(T1: StochasticLagrangian, T2: StochasticLagrangian) -> int:
    """log2 <Q_T1|Q_T2> = dim(T1 n T2) - t."""
    if T1.t != T2.t:
        raise DimensionError("overlap needs equal t")
    return gf2.intersect(T1.space, T2.space).dim - T1.t


@lru_cache(maxsize=None)
def overlap_exponents(t: int) -> np.ndarray:
    """g(T_i, T_j) for the ordered Sigma_{t,t}."""
    sigma = enumerate_sigma(t)
    bases = np.array([T.space.basis for T in sigma], dtype=np.uint64)
    g = t - pairwise_union_rank(bases, 2 * t)
    g.setflags(write=False)
    return g


def pochhammer_s(t: int, k: float) -> float:
    """prod_{r=0}^{t-2} (1 + 2^{r-k}); k may be math.inf."""
    if k == math.inf:
        return 1.0
    return math.prod(1.0 + 2.0 ** (r - k) for r in range(t - 1))


def pochhammer_exact(t: int, k: int) -> Fraction:
    return math.prod((1 + Fraction(2) ** (r - k) for r in range(t - 1)), start=Fraction(1))


@dataclass(frozen=True)
class CommutantModel:
    t: int
    n: int
    sigma: tuple[StochasticLagrangian, ...]
    gram_log2: np.ndarray = field(repr=False)  # exponents g; entry = 2^{n g}

    @property
    def size(self) -> int:
        return len(self.sigma)

    @cached_property
    def perm_count(self) -> int:
        return sum(T.is_permutation for T in self.sigma)

    @cached_property
    def defect_dims(self) -> np.ndarray:
        return np.array([T.defect_dim for T in self.sigma])

    @cached_property
    def gram(self) -> np.ndarray:
        return np.exp2(self.n * self.gram_log2.astype(float))

    def gram_exact(self) -> list[list[Fraction]]:
        return [[Fraction(1, 2 ** (-self.n * int(g))) for g in row] for row in self.gram_log2]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.gram)

    @property
    def rank(self) -> int:
        ev = self.eigenvalues
        return int(np.count_nonzero(ev > CONDITION_RATIO * ev[-1]))

    def require_conditioned(self) -> None:
        ev = self.eigenvalues
        if ev[0] < CONDITION_RATIO * ev[-1]:
            raise ConditioningError(
                f"Gram matrix for t={self.t}, n={self.n} is singular to working precision "
                f"(min eigenvalue {ev[0]:.3e}); the family is dependent for n < t-1")


def gram(t: int, n: int) -> CommutantModel:
    if n < 1:
        raise ValueError("n must be positive")
    return CommutantModel(t, n, enumerate_sigma(t), overlap_exponents(t))


def row_sums(model: CommutantModel) -> np.ndarray:
    return model.gram.sum(axis=1)


def row_sums_exact(model: CommutantModel) -> list[Fraction]:
    """Row sums from counts of each exponent, in exact arithmetic."""
    out = []
    for row in model.gram_log2:
        vals, counts = np.unique(row, return_counts=True)
        out.append(sum((int(c) * Fraction(2) ** (model.n * int(v)) for v, c in zip(vals, counts)),
                       Fraction(0)))
    return out


def frame_operator_deviation(t: int, n: int) -> float:
    """||Gamma - 1|| in operator norm."""
    model = gram(t, n)
    ev = model.eigenvalues
    return float(max(abs(ev[0] - 1.0), abs(ev[-1] - 1.0)))


# --- Gram-Schmidt cofactors --------------------------------------------------

@dataclass(frozen=True)
class GramSchmidtBasis:
    """E_j = sum_i A[i, j] Q_{T_i}^{(x)n}; column j of A holds E_j (A[i, j] = 0 for i > j)."""

    A: np.ndarray
    squared_norms: np.ndarray
    exact: list[list[Fraction]] | None = field(default=None, repr=False)

    def inner_products(self, model: CommutantModel) -> np.ndarray:
        return self.A.T @ model.gram @ self.A

    def max_normalized_offdiag(self, model: CommutantModel) -> float:
        G = self.inner_products(model)
        d = np.sqrt(np.abs(np.diag(G)))
        C = np.abs(G) / np.outer(d, d)
        np.fill_diagonal(C, 0.0)
        return float(C.max())


def _solve_with_det(B: list[list[Fraction]], col: int) -> tuple[Fraction, list[Fraction]]:
    """det(B) and B^{-1} e_col by exact Gauss-Jordan elimination."""
    m = len(B)
    M = [row[:] + [Fraction(int(i == col))] for i, row in enumerate(B)]
    det = Fraction(1)
    for c in range(m):
        p = next((r for r in range(c, m) if M[r][c] != 0), None)
        if p is None:
            return Fraction(0), [Fraction(0)] * m
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        piv = M[c][c]
        det *= piv
        inv = 1 / piv
        M[c] = [v * inv for v in M[c]]
        for r in range(m):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det, [M[r][m] for r in range(m)]


def cofactor_column(B, j: int) -> list:
    """A_{., j} for the leading block B (size j): det(B) * B^{-1} e_j."""
    det, x = _solve_with_det(B, j - 1)
    return [det * v for v in x]


def permutation_sum_coefficient(gram_rows, i: int, j: int):
    """The factorial formula: sum over Pi in S_j with Pi(j) = i of sign(Pi) prod_{l<j} Gamma_{l, Pi(l)}.

    Indices are 1-based.  Only practical for j <= 8.
    """
    total = 0
    others = [c for c in range(j) if c != i - 1]
    for tail in itertools.permutations(others):
        perm = list(tail) + [i - 1]
        inv = sum(1 for a in range(j) for b in range(a + 1, j) if perm[a] > perm[b])
        term = -1 if inv % 2 else 1
        for l in range(j - 1):
            term = term * gram_rows[l][perm[l]]
        total = total + term
    return total


def gram_schmidt_cofactors(model: CommutantModel, exact: bool = False) -> GramSchmidtBasis:
    """Cofactor form of Gram-Schmidt: A_{i,j} = (-1)^{i+j} minor_{j,i} of the leading j x j block."""
    model.require_conditioned()
    m = model.size
    A = np.zeros((m, m))
    exact_cols = None
    if exact:
        G = model.gram_exact()
        exact_cols = [[Fraction(0)] * m for _ in range(m)]
        for j in range(1, m + 1):
            col = cofactor_column([row[:j] for row in G[:j]], j)
            for i, v in enumerate(col):
                exact_cols[i][j - 1] = v
                A[i, j - 1] = float(v)
    else:
        G = model.gram
        for j in range(1, m + 1):
            B = G[:j, :j]
            sign, logdet = np.linalg.slogdet(B)
            e = np.zeros(j)
            e[-1] = 1.0
            A[:j, j - 1] = sign * np.exp(logdet) * np.linalg.solve(B, e)
    norms = np.einsum("ij,ik,kj->j", A, model.gram, A)
    return GramSchmidtBasis(A, norms, exact_cols)


def gram_schmidt_bounds(model: CommutantModel, basis: GramSchmidtBasis) -> dict:
    """Check the three coefficient bounds; exponents are log2 of the right-hand sides."""
    t, n = model.t, model.n
    A = basis.A
    d = model.defect_dims
    with np.errstate(divide="ignore"):
        logA = np.log2(np.abs(A))
    e1 = t**3 + 4 * t**2 + 6 * t - n * np.abs(d[:, None] - d[None, :])
    off = ~np.eye(model.size, dtype=bool)
    e2 = 2 * t**2 + 10 * t - n
    e3 = t**2 + 7 * t - n
    diag_dev = np.abs(np.diag(A) - 1.0)
    with np.errstate(divide="ignore"):
        log_dev = np.log2(diag_dev)
    return {
        "applicable": n >= 0.5 * (t * t + 5 * t),
        "first": bool(np.all(logA <= e1)),
        "first_margin_log2": float(np.min(e1 - logA)),
        "second": bool(np.all(logA[off] <= e2)),
        "second_margin_log2": float(np.min(e2 - logA[off])),
        "third": bool(np.all(diag_dev <= 2.0**e3)),
        "third_margin_log2": float(np.min(e3 - log_dev)),
        "max_offdiag": float(np.max(np.abs(A[off]))),
        "max_diag_deviation": float(diag_dev.max()),
    }


# --- Clifford projector in the small basis ----------------------------------

@dataclass(frozen=True)
class CliffordProjector:
    """P_Cl and P_H as maps on Q-basis coordinates.

    ``from_overlaps`` sends the overlap vector b_T = <Q_T^{(x)n}|X> of any X to
    the coordinates of P_Cl[X]; ``haar_from_overlaps`` does the same for P_H.
    """

    from_overlaps: np.ndarray
    haar_from_overlaps: np.ndarray
    gram: np.ndarray
    perm_count: int

    def cl(self, coeffs: np.ndarray) -> np.ndarray:
        return self.from_overlaps @ (self.gram @ coeffs)

    def haar(self, coeffs: np.ndarray) -> np.ndarray:
        return self.haar_from_overlaps @ (self.gram @ coeffs)

    def complement(self, coeffs: np.ndarray) -> np.ndarray:
        return self.cl(coeffs) - self.haar(coeffs)

    @property
    def complement_matrix(self) -> np.ndarray:
        """Coordinates of (P_Cl - P_H) applied to an element given by coordinates."""
        m = self.gram.shape[0]
        return np.eye(m) - self.haar_from_overlaps @ self.gram

    @property
    def rank_difference(self) -> int:
        return int(np.linalg.matrix_rank(self.complement_matrix, tol=1e-9))


def clifford_projector_coeffs(model: CommutantModel) -> CliffordProjector:
    model.require_conditioned()
    G = model.gram
    p = model.perm_count
    haar = np.zeros_like(G)
    haar[:p, :p] = np.linalg.inv(G[:p, :p])
    return CliffordProjector(np.linalg.inv(G), haar, G, p)
