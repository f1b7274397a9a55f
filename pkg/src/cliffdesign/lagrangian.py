"""Stochastic Lagrangian subspaces, the stochastic orthogonal group and defects.

A pair (x, y) with x, y in F2^t is packed as ``x | (y << t)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

from . import gf2
from .errors import ResourceLimitError
from .gf2 import F2Subspace, hamming_weight

MAX_ENUM_T = 5
MAX_ORTHOGONAL_T = 6


def ones(t: int) -> int:
    return (1 << t) - 1


def pack(x: int, y: int, t: int) -> int:
    return x | (y << t)


def unpack(v: int, t: int) -> tuple[int, int]:
    return v & ones(t), v >> t


def qq_packed(v: int, t: int) -> int:
    x, y = unpack(v, t)
    return gf2.qq_mod4(x, y)


def beta(u: int, v: int) -> int:
    """Polarization of the quadratic form: q(u+v) = q(u) + q(v) + 2 beta(u, v) mod 4."""
    return hamming_weight(u & v) & 1


def sigma_size(t: int) -> int:
    return math.prod(2**k + 1 for k in range(t - 1))


@dataclass(frozen=True)
class StochasticOrthogonal:
    """A t x t bit matrix stored by columns (``columns[j]`` is O e_j)."""

    columns: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.columns)

    def apply(self, x: int) -> int:
        out = 0
        for j, c in enumerate(self.columns):
            if (x >> j) & 1:
                out ^= c
        return out

    def is_permutation(self) -> bool:
        return all(hamming_weight(c) == 1 for c in self.columns)

    def as_permutation(self) -> tuple[int, ...]:
        return tuple(c.bit_length() - 1 for c in self.columns)

    def rows(self) -> list[list[int]]:
        return [[(c >> i) & 1 for c in self.columns] for i in range(self.t)]

    def is_invertible(self) -> bool:
        return gf2.rank(self.columns) == self.t

    def preserves_q(self) -> bool:
        # q(sum of columns over S) = |S| mod 4 follows from q(c_j) = 1 and even overlaps
        cols = self.columns
        if any(gf2.q_mod4(c) != 1 for c in cols):
            return False
        return all(beta(a, b) == 0 for a, b in itertools.combinations(cols, 2))

    def fixes_ones(self) -> bool:
        return self.apply(ones(self.t)) == ones(self.t)

    def is_stochastic_orthogonal(self) -> bool:
        return self.is_invertible() and self.preserves_q() and self.fixes_ones()


def permutation_matrix(perm: tuple[int, ...]) -> StochasticOrthogonal:
    """Matrix sending coordinate i to coordinate perm[i]."""
    return StochasticOrthogonal(tuple(1 << p for p in perm))


@dataclass(frozen=True)
class DefectSubspace:
    space: F2Subspace

    def __post_init__(self) -> None:
        S, t = self.space, self.space.ambient_dim
        if not all(gf2.q_mod4(b) == 0 for b in S.basis):
            raise ValueError("defect subspace needs weight = 0 mod 4 on its basis")
        if not all(beta(a, b) == 0 for a, b in itertools.combinations(S.basis, 2)):
            raise ValueError("defect subspace must be self-orthogonal")
        if not gf2.member(gf2.perp(S), ones(t)):
            raise ValueError("all-ones must be orthogonal to the defect subspace")

    @property
    def t(self) -> int:
        return self.space.ambient_dim

    @property
    def dim(self) -> int:
        return self.space.dim


@dataclass(frozen=True)
class StochasticLagrangian:
    """A t-dimensional subspace T of F2^{2t} indexing one commutant operator."""

    space: F2Subspace
    t: int

    @cached_property
    def _defects(self) -> tuple[F2Subspace, F2Subspace]:
        t = self.t
        left = gf2.subspace([unpack(v, t)[0] for v in
                             gf2.intersect(self.space, _left_axis(t)).basis], t)
        right = gf2.subspace([unpack(v, t)[1] for v in
                              gf2.intersect(self.space, _right_axis(t)).basis], t)
        return left, right

    @property
    def left_defect_dim(self) -> int:
        return self._defects[0].dim

    @property
    def right_defect_dim(self) -> int:
        return self._defects[1].dim

    @property
    def defect_dim(self) -> int:
        return self.left_defect_dim

    @cached_property
    def graph(self) -> StochasticOrthogonal | None:
        """O with T = {(Ox, x)} when both defects vanish, else None."""
        if self.right_defect_dim or self.left_defect_dim:
            return None
        t = self.t
        fiber: dict[int, int] = {}
        for v in gf2.span(self.space):
            x, y = unpack(v, t)
            fiber[y] = x
        return StochasticOrthogonal(tuple(fiber[1 << j] for j in range(t)))

    @property
    def is_permutation(self) -> bool:
        g = self.graph
        return g is not None and g.is_permutation()

    def elements(self) -> list[tuple[int, int]]:
        return [unpack(v, self.t) for v in gf2.span(self.space)]

    def sort_key(self) -> tuple:
        g = self.graph
        if g is not None and g.is_permutation():
            return (0, g.as_permutation())
        return (1, self.left_defect_dim, self.space.basis)

    def __repr__(self) -> str:
        rows = ", ".join(
            f"({gf2.to_str(x, self.t)},{gf2.to_str(y, self.t)})"
            for x, y in (unpack(b, self.t) for b in self.space.basis))
        return f"StochasticLagrangian(t={self.t}, [{rows}])"

    @classmethod
    def from_orthogonal(cls, O: StochasticOrthogonal) -> "StochasticLagrangian":
        t = O.t
        return cls(gf2.subspace([pack(c, 1 << j, t) for j, c in enumerate(O.columns)], 2 * t), t)

    @classmethod
    def from_permutation(cls, perm: tuple[int, ...]) -> "StochasticLagrangian":
        return cls.from_orthogonal(permutation_matrix(perm))

    @classmethod
    def from_pairs(cls, pairs, t: int) -> "StochasticLagrangian":
        return cls(gf2.subspace([pack(x, y, t) for x, y in pairs], 2 * t), t)


@lru_cache(maxsize=None)
def _left_axis(t: int) -> F2Subspace:
    return gf2.subspace([1 << i for i in range(t)], 2 * t)


@lru_cache(maxsize=None)
def _right_axis(t: int) -> F2Subspace:
    return gf2.subspace([1 << (t + i) for i in range(t)], 2 * t)


def is_stochastic_lagrangian(S: F2Subspace) -> bool:
    if S.ambient_dim % 2:
        raise ValueError("ambient dimension must be even")
    t = S.ambient_dim // 2
    if S.dim != t or not gf2.member(S, ones(2 * t)):
        return False
    if any(qq_packed(b, t) for b in S.basis):
        return False
    return all(qq_packed(a ^ b, t) == 0 for a, b in itertools.combinations(S.basis, 2))


def is_stochastic_lagrangian_exhaustive(S: F2Subspace) -> bool:
    """Same predicate by checking every element of the span."""
    t = S.ambient_dim // 2
    return (S.ambient_dim % 2 == 0 and S.dim == t and gf2.member(S, ones(2 * t))
            and all(qq_packed(v, t) == 0 for v in gf2.span(S)))


def _extend_level(level: set[tuple[int, ...]], candidates: list[int], width: int) -> set:
    out = set()
    for basis in level:
        pivot_mask = 0
        for r in basis:
            pivot_mask |= r & -r
        for v in candidates:
            # one reduced representative per extension, orthogonal to the current span
            if v & pivot_mask:
                continue
            if any(beta(v, b) for b in basis):
                continue
            low = v & -v
            rows = [r ^ v if r & low else r for r in basis]
            rows.append(v)
            rows.sort(key=lambda r: r & -r)
            out.add(tuple(rows))
    return out


@lru_cache(maxsize=None)
def enumerate_sigma(t: int) -> tuple[StochasticLagrangian, ...]:
    """All of Sigma_{t,t}: permutations first (lexicographic), then by defect and basis."""
    if not 1 <= t <= MAX_ENUM_T:
        raise ResourceLimitError(f"enumeration supports 1 <= t <= {MAX_ENUM_T}, got {t}")
    width = 2 * t
    one = ones(width)
    candidates = [v for v in range(1, 1 << width) if v != one and qq_packed(v, t) == 0]
    level = {(one,)}
    for _ in range(t - 1):
        level = _extend_level(level, candidates, width)
    spaces = [StochasticLagrangian(F2Subspace(b, width), t) for b in level]
    spaces.sort(key=StochasticLagrangian.sort_key)
    return tuple(spaces)


def permutation_count(sigma) -> int:
    return sum(T.is_permutation for T in sigma)


def defects(T: StochasticLagrangian) -> tuple[DefectSubspace, DefectSubspace]:
    left, right = T._defects
    return DefectSubspace(left), DefectSubspace(right)


def image_space(T: StochasticLagrangian) -> F2Subspace:
    """{x : (x, y) in T for some y}."""
    return gf2.subspace([unpack(b, T.t)[0] for b in T.space.basis], T.t)


@lru_cache(maxsize=None)
def enumerate_Ot(t: int) -> tuple[StochasticOrthogonal, ...]:
    """Stochastic orthogonal t x t matrices, by backtracking over columns.

    Columns need weight 1 mod 4, pairwise even overlaps and must sum to
    all-ones; those conditions are equivalent to the definition.
    """
    if not 1 <= t <= MAX_ORTHOGONAL_T:
        raise ResourceLimitError(f"enumerate_Ot supports 1 <= t <= {MAX_ORTHOGONAL_T}, got {t}")
    cands = [c for c in range(1, 1 << t) if hamming_weight(c) % 4 == 1]
    found = []

    def extend(cols: list[int]) -> None:
        if len(cols) == t:
            acc = 0
            for c in cols:
                acc ^= c
            if acc == ones(t):
                found.append(StochasticOrthogonal(tuple(cols)))
            return
        for c in cands:
            if all(beta(c, d) == 0 for d in cols) and c not in cols:
                cols.append(c)
                extend(cols)
                cols.pop()

    extend([])
    found.sort(key=lambda O: (not O.is_permutation(), O.columns))
    return tuple(found)


def anti_identity(t: int) -> StochasticOrthogonal:
    """Zero diagonal, ones elsewhere; a member of O_t only for t = 2 mod 4."""
    if t < 2 or t % 4 != 2:
        raise ValueError(f"anti-identity columns have weight {t - 1}, not 1 mod 4, for t={t}")
    return StochasticOrthogonal(tuple(ones(t) ^ (1 << j) for j in range(t)))


def defect_element(t: int = 4) -> StochasticLagrangian:
    """First enumerated element with nonzero defect."""
    for T in enumerate_sigma(t):
        if T.defect_dim:
            return T
    raise ValueError(f"no defect element for t={t}")
