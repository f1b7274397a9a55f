import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffdesign import gf2, lagrangian as lg
from cliffdesign.errors import ResourceLimitError


def test_pack_round_trip():
    for x, y in itertools.product(range(8), repeat=2):
        assert lg.unpack(lg.pack(x, y, 3), 3) == (x, y)


def test_identity_and_permutations_are_lagrangian():
    ident = lg.StochasticLagrangian.from_permutation((0, 1, 2))
    assert lg.is_stochastic_lagrangian(ident.space)
    for perm in itertools.permutations(range(4)):
        assert lg.is_stochastic_lagrangian(lg.StochasticLagrangian.from_permutation(perm).space)


def test_t2_examples():
    swap = gf2.subspace([lg.pack(0b01, 0b10, 2), lg.pack(0b10, 0b01, 2)], 4)
    bad = gf2.subspace([lg.pack(0b01, 0b01, 2), lg.pack(0b10, 0b11, 2)], 4)
    assert lg.is_stochastic_lagrangian(swap)
    assert not lg.is_stochastic_lagrangian(bad)


@pytest.mark.parametrize("t, size, perms", [(1, 1, 1), (2, 2, 2), (3, 6, 6), (4, 30, 24)])
def test_enumeration_counts(t, size, perms):
    sigma = lg.enumerate_sigma(t)
    assert len(sigma) == size == lg.sigma_size(t)
    assert lg.permutation_count(sigma) == perms
    assert all(T.is_permutation for T in sigma[:perms])


def test_enumeration_limit():
    with pytest.raises(ResourceLimitError):
        lg.enumerate_sigma(7)


@pytest.mark.parametrize("t", [2, 3, 4])
def test_enumeration_matches_exhaustive_predicate(t):
    for T in lg.enumerate_sigma(t):
        assert lg.is_stochastic_lagrangian_exhaustive(T.space)
    assert len({T.space for T in lg.enumerate_sigma(t)}) == lg.sigma_size(t)


def test_permutation_defects_are_trivial():
    for T in lg.enumerate_sigma(4)[:24]:
        assert (T.left_defect_dim, T.right_defect_dim) == (0, 0)


def test_defect_element_t4():
    T = lg.defect_element(4)
    left, right = lg.defects(T)
    assert (left.dim, right.dim) == (1, 1)
    assert left.space.basis == right.space.basis == (0b1111,)


def test_small_Ot_are_permutations():
    for t in range(1, 5):
        assert all(O.is_permutation() for O in lg.enumerate_Ot(t))
    assert len(lg.enumerate_Ot(4)) == 24


def test_anti_identity():
    assert lg.anti_identity(2).as_permutation() == (1, 0)
    A6 = lg.anti_identity(6)
    assert A6.is_stochastic_orthogonal() and not A6.is_permutation()
    assert A6 in lg.enumerate_Ot(6)
    with pytest.raises(ValueError):
        lg.anti_identity(4)


def test_graph_of_orthogonal():
    for O in lg.enumerate_Ot(6)[::50]:
        T = lg.StochasticLagrangian.from_orthogonal(O)
        assert lg.is_stochastic_lagrangian(T.space)
        assert T.graph == O


@given(st.permutations(range(5)))
def test_permutation_graphs(perm):
    T = lg.StochasticLagrangian.from_permutation(tuple(perm))
    assert lg.is_stochastic_lagrangian(T.space)
    assert T.is_permutation and T.defect_dim == 0
    assert T in lg.enumerate_sigma(5)[:120]


@given(st.integers(0, 29), st.integers(0, 29))
def test_sigma_t4_closed_under_predicates(i, j):
    sigma = lg.enumerate_sigma(4)
    A, B = sigma[i], sigma[j]
    inter = gf2.intersect(A.space, B.space)
    assert inter.dim >= 1
    assert lg.ones(8) in inter
