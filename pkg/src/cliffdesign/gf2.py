"""Linear algebra over F2 on bit-packed vectors.

A vector of length L is a Python int whose bit i holds coordinate i.  The
string form writes coordinates left to right, so ``"110"`` is ``0b011``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import DimensionError

MAX_LENGTH = 64


def from_str(s: str) -> int:
    """Parse a coordinate string such as ``"1010"``."""
    v = 0
    for i, ch in enumerate(s):
        if ch == "1":
            v |= 1 << i
        elif ch != "0":
            raise ValueError(f"not a bit string: {s!r}")
    return v


def to_str(v: int, length: int) -> str:
    return "".join("1" if (v >> i) & 1 else "0" for i in range(length))


def hamming_weight(v: int) -> int:
    return int(v).bit_count()


def q_mod4(x: int) -> int:
    """Weight of ``x`` modulo 4."""
    return hamming_weight(x) % 4


def qq_mod4(x: int, y: int) -> int:
    """(h(x) - h(y)) mod 4 for a pair of equal-length vectors."""
    return (hamming_weight(x) - hamming_weight(y)) % 4


def dot(u: int, v: int) -> int:
    return hamming_weight(u & v) & 1


def _check_length(v: int, length: int) -> None:
    if v < 0 or v >> length:
        raise DimensionError(f"vector {v:#x} does not fit in length {length}")


def _insert(pivots: dict[int, int], v: int) -> bool:
    """Add ``v`` to a reduced basis keyed by pivot bit; return True if it grew."""
    for p in sorted(pivots):
        if (v >> p) & 1:
            v ^= pivots[p]
    if v == 0:
        return False
    low = v & -v
    for p, row in pivots.items():
        if row & low:
            pivots[p] = row ^ v
    pivots[low.bit_length() - 1] = v
    return True


@dataclass(frozen=True)
class F2Subspace:
    """Subspace of F2^ambient_dim stored by its reduced row-echelon basis.

    Each basis row's pivot is its lowest set coordinate, pivots increase
    down the list and no other row has a 1 in a pivot column, so two
    subspaces are equal exactly when their basis tuples are.
    """

    basis: tuple[int, ...]
    ambient_dim: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple((r & -r).bit_length() - 1 for r in self.basis)

    def __contains__(self, v: int) -> bool:
        return member(self, v)

    def __len__(self) -> int:
        return 1 << self.dim

    def __iter__(self) -> Iterator[int]:
        return iter(span(self))

    def __repr__(self) -> str:
        rows = ", ".join(to_str(r, self.ambient_dim) for r in self.basis)
        return f"F2Subspace([{rows}], ambient_dim={self.ambient_dim})"


def rref(rows: Iterable[int], ambient_dim: int) -> tuple[F2Subspace, int]:
    if not 0 <= ambient_dim <= MAX_LENGTH:
        raise DimensionError(f"ambient_dim {ambient_dim} outside 0..{MAX_LENGTH}")
    pivots: dict[int, int] = {}
    for v in rows:
        _check_length(v, ambient_dim)
        _insert(pivots, v)
    basis = tuple(pivots[p] for p in sorted(pivots))
    return F2Subspace(basis, ambient_dim), len(basis)


def subspace(rows: Iterable[int], ambient_dim: int) -> F2Subspace:
    return rref(rows, ambient_dim)[0]


def zero(ambient_dim: int) -> F2Subspace:
    return F2Subspace((), ambient_dim)


def full(ambient_dim: int) -> F2Subspace:
    return F2Subspace(tuple(1 << i for i in range(ambient_dim)), ambient_dim)


def reduce(S: F2Subspace, v: int) -> int:
    for r in S.basis:
        low = r & -r
        if v & low:
            v ^= r
    return v


def member(S: F2Subspace, v: int) -> bool:
    _check_length(v, S.ambient_dim)
    return reduce(S, v) == 0


def _same_ambient(a: F2Subspace, b: F2Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionError(f"ambient dims differ: {a.ambient_dim} vs {b.ambient_dim}")


def subspace_sum(a: F2Subspace, b: F2Subspace) -> F2Subspace:
    _same_ambient(a, b)
    return subspace(a.basis + b.basis, a.ambient_dim)


def perp(S: F2Subspace) -> F2Subspace:
    """Orthogonal complement under the standard dot product."""
    pivot_bits = 0
    for r in S.basis:
        pivot_bits |= r & -r
    out = []
    for f in range(S.ambient_dim):
        if (pivot_bits >> f) & 1:
            continue
        v = 1 << f
        for r in S.basis:
            if (r >> f) & 1:
                v |= r & -r
        out.append(v)
    return subspace(out, S.ambient_dim)


def intersect(a: F2Subspace, b: F2Subspace) -> F2Subspace:
    _same_ambient(a, b)
    return perp(subspace_sum(perp(a), perp(b)))


def is_subspace_of(a: F2Subspace, b: F2Subspace) -> bool:
    _same_ambient(a, b)
    return all(reduce(b, r) == 0 for r in a.basis)


def span(S: F2Subspace) -> list[int]:
    """All 2^dim elements, in Gray-code order starting from 0."""
    out = [0]
    v = 0
    for i in range(1, 1 << S.dim):
        v ^= S.basis[(i & -i).bit_length() - 1]
        out.append(v)
    return out


def rank(rows: Sequence[int]) -> int:
    pivots: dict[int, int] = {}
    return sum(_insert(pivots, v) for v in rows)
