"""Weight-preservation probabilities, computed exactly by brute force."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import gf2
from ._kernels import preserve_count, shift_count, span_array
from .errors import ResourceLimitError
from .gf2 import F2Subspace
from .lagrangian import DefectSubspace, StochasticLagrangian, StochasticOrthogonal

MAX_T = 20


@dataclass(frozen=True)
class WeightReport:
    probability: Fraction
    bound: Fraction
    saturated: bool
    column_weight: int | None = None
    applicable: bool = True

    def as_dict(self) -> dict:
        return {
            "probability": float(self.probability),
            "probability_exact": str(self.probability),
            "bound": float(self.bound),
            "saturated": self.saturated,
            "column_weight": self.column_weight,
            "bound_applicable": self.applicable,
        }


def column_bound(r: int) -> Fraction:
    """1/2 + 2^{-(r+1)} C(r+1, (r+1)/2) for odd r, 1/2 for even r."""
    if r < 1:
        raise ValueError("column weight must be positive")
    if r % 2 == 0:
        return Fraction(1, 2)
    return Fraction(1, 2) + Fraction(comb(r + 1, (r + 1) // 2), 2 ** (r + 1))


def _check_t(t: int) -> None:
    if not 1 <= t <= MAX_T:
        raise ResourceLimitError(f"brute-force probabilities need 1 <= t <= {MAX_T}, got {t}")


def preserve_prob(O: StochasticOrthogonal) -> WeightReport:
    """Pr over uniform y of h(Oy) = h(y), with the sharpest column bound.

    Every column of weight r > 1 gives a valid bound; the smallest one is
    reported.  Permutations have no such column and get bound 1.
    """
    t = O.t
    _check_t(t)
    if not O.is_invertible():
        raise ValueError("matrix is not invertible over F2")
    p = Fraction(preserve_count(O.columns, t), 2**t)
    weights = sorted({gf2.hamming_weight(c) for c in O.columns if gf2.hamming_weight(c) > 1})
    if not weights:
        return WeightReport(p, Fraction(1), p == 1, 1, applicable=False)
    r = min(weights, key=lambda w: (column_bound(w), w))
    bound = column_bound(r)
    return WeightReport(p, bound, p == bound, r)


def pair_prob(T: StochasticLagrangian) -> WeightReport:
    """Pr over uniform (x, y) in T of h(x) = h(y); bound 7/8 off the permutations."""
    t = T.t
    _check_t(t)
    elems = span_array(T.space.basis)
    mask = np.uint64((1 << t) - 1)
    hx = np.bitwise_count(elems & mask)
    hy = np.bitwise_count(elems >> np.uint64(t))
    p = Fraction(int(np.count_nonzero(hx == hy)), len(elems))
    if T.is_permutation:
        return WeightReport(p, Fraction(1), p == 1, applicable=False)
    bound = Fraction(7, 8)
    return WeightReport(p, bound, p == bound)


def defect_shift_prob(N: DefectSubspace | F2Subspace, n_vec: int) -> Fraction:
    """Pr over uniform x in perp(N) of h(x) = h(x + n_vec)."""
    space = N.space if isinstance(N, DefectSubspace) else N
    _check_t(space.ambient_dim)
    if not gf2.member(space, n_vec):
        raise ValueError("shift vector is not in N")
    elems = span_array(gf2.perp(space).basis)
    return Fraction(shift_count(elems, n_vec), len(elems))
