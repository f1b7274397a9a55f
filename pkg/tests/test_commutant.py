import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffdesign import commutant as cm, lagrangian as lg, operators as ops
from cliffdesign.errors import ConditioningError


def test_overlap_exponents_small():
    g = cm.overlap_exponents(2)
    assert g.tolist() == [[0, -1], [-1, 0]]
    assert np.all(np.diag(cm.overlap_exponents(4)) == 0)


@pytest.mark.parametrize("t", [2, 3])
def test_overlaps_match_dense_traces(t):
    sigma = lg.enumerate_sigma(t)
    g = cm.overlap_exponents(t)
    for i, A in enumerate(sigma):
        for j, B in enumerate(sigma):
            assert ops.dense_overlap(A, B) == 2.0 ** g[i, j]


def test_row_sum_examples():
    assert cm.row_sums(cm.gram(2, 1)) == pytest.approx([1.5, 1.5])
    target = (1 + 2**-6) * (1 + 2**-5) * (1 + 2**-4)
    assert np.allclose(cm.row_sums(cm.gram(4, 6)), target, rtol=1e-14)
    assert cm.pochhammer_s(4, 6) == pytest.approx(target, rel=1e-15)


@pytest.mark.parametrize("t, n", [(3, 2), (4, 3), (4, 7)])
def test_row_sums_exact(t, n):
    assert set(cm.row_sums_exact(cm.gram(t, n))) == {cm.pochhammer_exact(t, n)}


def test_frame_deviation():
    assert cm.frame_operator_deviation(2, 4) == 2.0**-4
    assert cm.frame_operator_deviation(4, 10) <= 4 * 2.0**-6
    vals = [cm.frame_operator_deviation(3, n) for n in range(1, 12)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("t, n", [(2, 3), (3, 4), (4, 6)])
def test_frame_deviation_bound(t, n):
    assert cm.frame_operator_deviation(t, n) <= cm.pochhammer_s(t, n) - 1 + 1e-15


def test_rank_below_threshold():
    assert cm.gram(4, 3).rank == 30
    assert cm.gram(4, 2).rank == 29
    assert cm.gram(3, 1).rank == 5
    with pytest.raises(ConditioningError):
        cm.gram(4, 2).require_conditioned()


def test_cofactor_first_column():
    basis = cm.gram_schmidt_cofactors(cm.gram(3, 2))
    assert basis.A[0, 0] == 1.0


@pytest.mark.parametrize("n", [2, 3, 6])
def test_cofactor_orthogonality_t3(n):
    model = cm.gram(3, n)
    assert cm.gram_schmidt_cofactors(model).max_normalized_offdiag(model) < 1e-8


def test_exact_cofactors_match_float():
    model = cm.gram(3, 3)
    b = cm.gram_schmidt_cofactors(model, exact=True)
    f = cm.gram_schmidt_cofactors(model)
    assert np.allclose(b.A, f.A, rtol=1e-12, atol=0)
    G = model.gram_exact()
    for j in range(1, 7):
        for i in range(1, j + 1):
            assert b.exact[i - 1][j - 1] == cm.permutation_sum_coefficient(G, i, j)


def test_projector_t3_equals_haar():
    P = cm.clifford_projector_coeffs(cm.gram(3, 4))
    assert P.rank_difference == 0
    e = np.eye(6)[2]
    assert np.allclose(P.cl(e), e)


def test_projector_t4_rank_gap():
    P = cm.clifford_projector_coeffs(cm.gram(4, 4))
    assert P.rank_difference == 6
    e = np.eye(30)[27]
    assert np.allclose(P.cl(e), e, atol=1e-12)
    assert np.allclose(P.haar(P.haar(e)), P.haar(e), atol=1e-10)


@given(st.integers(2, 4), st.integers(2, 14))
def test_row_sum_identity(t, n):
    rows = cm.row_sums(cm.gram(t, n))
    assert np.allclose(rows, cm.pochhammer_s(t, n), rtol=1e-12, atol=0)


@given(st.integers(2, 4), st.integers(1, 12))
def test_gram_symmetric_unit_diagonal(t, n):
    G = cm.gram(t, n).gram
    assert np.array_equal(G, G.T)
    assert np.all(np.diag(G) == 1.0)
    assert np.all((G > 0) & (G <= 1))


def test_pochhammer_limits():
    assert cm.pochhammer_s(5, math.inf) == 1.0
    assert cm.pochhammer_exact(2, 1) == Fraction(3, 2)
