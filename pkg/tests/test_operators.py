import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffdesign import gf2, lagrangian as lg, operators as ops
from cliffdesign.errors import ResourceLimitError


def test_r_identity_and_permutation():
    ident = lg.enumerate_sigma(3)[0]
    assert np.array_equal(ops.r_of(ident), np.eye(8))
    perm = (1, 2, 0)
    T = lg.StochasticLagrangian.from_permutation(perm)
    assert np.array_equal(ops.r_of(T), ops.permutation_operator(perm))


def test_q_identity_t2():
    assert np.allclose(ops.q_of(lg.enumerate_sigma(2)[0]), 0.5 * np.eye(4))


def test_defect_rank():
    r = ops.r_of(lg.defect_element(4))
    assert np.linalg.matrix_rank(r) == 4
    assert r.sum() == 16


@pytest.mark.parametrize("t", [2, 3, 4])
def test_rT_norm_identities(t):
    for T in lg.enumerate_sigma(t):
        r = ops.r_of(T)
        d = T.right_defect_dim
        one, two, inf = ops.schatten_norms(r)
        assert one == pytest.approx(2.0 ** (t - d), abs=1e-10)
        assert two == pytest.approx(2.0 ** (t / 2), abs=1e-10)
        assert inf == pytest.approx(2.0**d, abs=1e-10)
        assert np.linalg.matrix_rank(r) == 2 ** (t - 2 * d)
        assert np.linalg.norm(ops.q_of(T)) == pytest.approx(1.0)


def test_css_projector():
    N = gf2.subspace([0b1111], 4)
    P = ops.css_projector(N)
    assert np.trace(P) == pytest.approx(4.0)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.array_equal(ops.css_projector(gf2.zero(4)), np.eye(16))


def test_decomposition_cases():
    O, N = ops.decompose(lg.enumerate_sigma(3)[3])
    assert O.is_permutation() and N.dim == 0
    O, N = ops.decompose(lg.defect_element(4))
    assert O.is_permutation() and N.space.basis == (0b1111,)
    anti = lg.StochasticLagrangian.from_orthogonal(lg.anti_identity(6))
    O, N = ops.decompose(anti)
    assert O == lg.anti_identity(6) and N.dim == 0


def test_all_t4_decompose():
    assert all(ops.verify_decomposition(T) for T in lg.enumerate_sigma(4))


def test_haar_fixes_permutations():
    for perm in itertools.permutations(range(3)):
        P = ops.permutation_operator(perm)
        assert np.allclose(ops.haar_apply(3, P), P, atol=1e-12)


def test_haar_overlap_special_values():
    anti = lg.StochasticLagrangian.from_orthogonal(lg.anti_identity(6))
    assert ops.haar_overlap(anti) == pytest.approx(0.25 * (1 + 9 / 7), abs=1e-10)
    assert ops.haar_overlap(anti) == pytest.approx(4 / 7, abs=1e-10)
    N = lg.defects(lg.defect_element(4))[1]
    assert ops.css_haar_overlap(N, 4) == pytest.approx(0.7, abs=1e-10)
    assert ops.haar_overlap(lg.enumerate_sigma(4)[5]) == pytest.approx(1.0)


@pytest.mark.parametrize("t", [4, 5])
def test_haar_overlap_bound(t):
    sigma = lg.enumerate_sigma(t)
    vals = [ops.haar_overlap(T) for T in sigma if not T.is_permutation]
    assert max(vals) <= 7 / 8 + 1e-12


def test_diag_twirl():
    D = np.diag(np.arange(8.0))
    assert np.array_equal(ops.diag_apply(3, D), D)
    P = ops.haar_symmetrizer(3).superoperator()
    for j in range(0, 64, 7):
        e = np.zeros(64)
        e[j] = 1
        A = ops.haar_apply(3, e.reshape(8, 8))
        assert np.allclose(ops.diag_apply(3, A), A, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)


def test_diag_overlap_is_pair_probability():
    from cliffdesign.hamming import pair_prob
    for T in lg.enumerate_sigma(4):
        assert ops.diag_overlap(T) == pytest.approx(float(pair_prob(T).probability))


def test_size_limit():
    with pytest.raises(ResourceLimitError):
        ops.haar_symmetrizer(7)


@given(st.integers(0, 29), st.integers(0, 29))
def test_overlap_dense_vs_intersection(i, j):
    from cliffdesign.commutant import overlap_exact
    sigma = lg.enumerate_sigma(4)
    A, B = sigma[i], sigma[j]
    assert ops.dense_overlap(A, B) == 2.0 ** overlap_exact(A, B)
